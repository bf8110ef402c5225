#include "factopt/config.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace factopt {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) return std::nullopt;
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class Parser {
 public:
  explicit Parser(std::string_view text) {
    int line_no = 0;
    std::string line;
    std::istringstream in{std::string(text)};
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        fail(line_no, "expected key=value");
        continue;
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) {
        fail(line_no, "empty key");
        continue;
      }
      if (entries_.contains(key)) {
        fail(line_no, "duplicate key '" + key + "'");
        continue;
      }
      entries_[key] = Entry{value, line_no, false};
    }
  }

  ConfigParse run() {
    ExperimentConfig cfg;

    const auto problem = take("problem.name");
    if (!problem)
      errors_.push_back("missing required key 'problem.name'");
    else
      cfg.problem_name = problem->value;

    const auto kind = take("optim.kind");
    std::optional<OptimizerKind> opt_kind;
    if (!kind) {
      errors_.push_back("missing required key 'optim.kind'");
    } else {
      opt_kind = parse_optimizer_kind(kind->value);
      if (!opt_kind)
        fail(kind->line, "unknown optimizer kind '" + kind->value + "'");
    }

    if (const auto steps = take("run.steps")) {
      const auto v = to_u64(steps->value);
      if (!v || *v < 1)
        fail(steps->line, "value for 'run.steps' must be a positive integer");
      else
        cfg.steps = static_cast<std::int64_t>(*v);
    } else {
      errors_.push_back("missing required key 'run.steps'");
    }

    if (const auto seed = take("run.seed")) {
      const auto v = to_u64(seed->value);
      if (!v)
        fail(seed->line, "value for 'run.seed' must be a nonnegative integer");
      else
        cfg.seed = *v;
    } else {
      errors_.push_back("missing required key 'run.seed'");
    }

    if (const auto every = take("run.trace_every")) {
      const auto v = to_u64(every->value);
      if (!v || *v < 1)
        fail(every->line, "value for 'run.trace_every' must be a positive integer");
      else
        cfg.trace_every = static_cast<std::int64_t>(*v);
    }

    if (const auto path = take("run.checkpoint")) cfg.checkpoint_path = path->value;
    if (const auto at = take("run.checkpoint_at")) {
      const auto v = to_u64(at->value);
      if (!v || *v < 1)
        fail(at->line, "value for 'run.checkpoint_at' must be a positive integer");
      else
        cfg.checkpoint_at = static_cast<std::int64_t>(*v);
    }

    if (problem) parse_problem(cfg);
    if (opt_kind) parse_optimizer(cfg, *opt_kind);

    for (const auto& [key, entry] : entries_) {
      if (entry.used) continue;
      if (known_keys().contains(key)) {
        if (key.starts_with("problem.") && problem)
          fail(entry.line,
               "key '" + key + "' does not apply to problem '" + problem->value + "'");
        else if (kind && opt_kind)
          fail(entry.line, "key '" + key + "' does not apply to optimizer '" +
                               kind->value + "'");
        else
          fail(entry.line, "key '" + key + "' is not applicable here");
      } else {
        fail(entry.line, "unknown key '" + key + "'");
      }
    }

    ConfigParse out;
    std::sort(errors_.begin(), errors_.end());
    out.errors = std::move(errors_);
    if (out.errors.empty()) {
      try {
        cfg.optimizer.validate({});
      } catch (const std::exception& e) {
        out.errors.emplace_back(e.what());
      }
    }
    if (out.errors.empty()) out.config = std::move(cfg);
    return out;
  }

 private:
  void fail(int line, const std::string& msg) {
    errors_.push_back("line " + std::to_string(line) + ": " + msg);
  }

  std::optional<Entry> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second;
  }

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "problem.name",      "problem.n",         "problem.cond",
        "problem.noise",     "problem.init_rms",  "problem.features",
        "problem.examples",  "problem.batch",     "problem.classes",
        "problem.d_in",      "problem.d_hidden",  "problem.d_out",
        "problem.target_noise", "problem.d_model", "problem.vocab",
        "problem.variant",   "problem.t_jump",    "problem.low",
        "problem.high",      "problem.rows",      "problem.cols",
        "optim.kind",        "optim.beta1",       "optim.beta2",
        "optim.eps",         "optim.eps1",        "optim.eps2",
        "optim.clip_d",      "decay.kind",        "decay.beta2",
        "decay.c",           "schedule.kind",     "schedule.scale",
        "schedule.warmup_slope", "schedule.cap",  "run.steps",
        "run.seed",          "run.trace_every",   "run.checkpoint",
        "run.checkpoint_at",
    };
    return keys;
  }

  static std::optional<OptimizerKind> parse_optimizer_kind(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "adam-equiv") return OptimizerKind::AdamEquivalent;
    if (s == "adam-factored") return OptimizerKind::AdamFactored;
    if (s == "adam-rowmean") return OptimizerKind::AdamRowMean;
    if (s == "adam-colmean") return OptimizerKind::AdamColMean;
    if (s == "adafactor") return OptimizerKind::Adafactor;
    return std::nullopt;
  }

  // Reads one numeric problem/optimizer key with a range predicate.
  template <typename T, typename Convert, typename Pred>
  void numeric(const std::string& key, Convert convert, Pred pred,
               const std::string& range_msg, T& out) {
    const auto e = take(key);
    if (!e) return;
    const auto v = convert(e->value);
    if (!v || !pred(*v))
      fail(e->line, "value for '" + key + "' " + range_msg + ": got '" + e->value + "'");
    else
      out = static_cast<T>(*v);
  }

  template <typename T>
  void positive_int(const std::string& key, T& out) {
    numeric<T>(
        key, to_u64, [](std::uint64_t v) { return v >= 1; },
        "must be a positive integer", out);
  }

  void nonneg_double(const std::string& key, double& out) {
    numeric<double>(
        key, to_double, [](double v) { return v >= 0.0; },
        "must be a nonnegative number", out);
  }

  void positive_double(const std::string& key, double& out) {
    numeric<double>(
        key, to_double, [](double v) { return v > 0.0; }, "must be positive", out);
  }

  void unit_open_double(const std::string& key, double& out) {
    numeric<double>(
        key, to_double, [](double v) { return v > 0.0 && v < 1.0; },
        "must lie in (0, 1)", out);
  }

  void parse_problem(ExperimentConfig& cfg) {
    const std::string& name = cfg.problem_name;
    if (name == "quad") {
      QuadParams p;
      positive_int("problem.n", p.n);
      numeric<double>(
          "problem.cond", to_double, [](double v) { return v >= 1.0; },
          "must be >= 1", p.cond);
      nonneg_double("problem.noise", p.noise);
      positive_double("problem.init_rms", p.init_rms);
      cfg.problem = p;
    } else if (name == "logreg") {
      LogregParams p;
      positive_int("problem.features", p.features);
      positive_int("problem.examples", p.examples);
      positive_int("problem.batch", p.batch);
      numeric<std::size_t>(
          "problem.classes", to_u64, [](std::uint64_t v) { return v >= 2; },
          "must be >= 2", p.classes);
      if (p.batch > p.examples)
        errors_.push_back("'problem.batch' must not exceed 'problem.examples'");
      cfg.problem = p;
    } else if (name == "mlp") {
      MlpParams p;
      positive_int("problem.d_in", p.d_in);
      positive_int("problem.d_hidden", p.d_hidden);
      positive_int("problem.d_out", p.d_out);
      positive_int("problem.examples", p.examples);
      nonneg_double("problem.target_noise", p.target_noise);
      cfg.problem = p;
    } else if (name == "embed-scale") {
      EmbedParams p;
      numeric<std::size_t>(
          "problem.d_model", to_u64, [](std::uint64_t v) { return v >= 4; },
          "must be >= 4", p.d_model);
      positive_int("problem.vocab", p.vocab);
      positive_int("problem.batch", p.batch);
      if (const auto v = take("problem.variant")) {
        if (v->value == "scaled")
          p.variant = EmbeddingVariant::Scaled;
        else if (v->value == "unit-init")
          p.variant = EmbeddingVariant::UnitInit;
        else if (v->value == "small-init")
          p.variant = EmbeddingVariant::SmallInit;
        else
          fail(v->line, "value for 'problem.variant' must be scaled, unit-init or "
                        "small-init");
      }
      cfg.problem = p;
    } else if (name == "stream-jump") {
      StreamJumpParams p;
      positive_int("problem.t_jump", p.t_jump);
      positive_double("problem.low", p.low);
      positive_double("problem.high", p.high);
      positive_int("problem.rows", p.rows);
      positive_int("problem.cols", p.cols);
      cfg.problem = p;
    } else {
      errors_.push_back("unknown problem '" + name + "'");
    }
  }

  void parse_optimizer(ExperimentConfig& cfg, OptimizerKind kind) {
    OptimizerConfig& opt = cfg.optimizer;
    opt.kind = kind;

    const bool adam_family = kind == OptimizerKind::Adam ||
                             kind == OptimizerKind::AdamEquivalent ||
                             kind == OptimizerKind::AdamFactored ||
                             kind == OptimizerKind::AdamRowMean ||
                             kind == OptimizerKind::AdamColMean;
    const bool adafactor = kind == OptimizerKind::Adafactor;

    // Kind-specific defaults; Adam's momentum is off for the estimator
    // ablations, which track second moments only.
    if (kind == OptimizerKind::AdamFactored || kind == OptimizerKind::AdamRowMean ||
        kind == OptimizerKind::AdamColMean)
      opt.adam.beta1 = 0.0;

    if (adam_family) {
      numeric<double>(
          "optim.beta1", to_double, [](double v) { return v >= 0.0 && v < 1.0; },
          "must lie in [0, 1)", opt.adam.beta1);
      unit_open_double("optim.beta2", opt.adam.beta2);
      positive_double("optim.eps", opt.adam.eps);
    } else if (adafactor) {
      numeric<double>(
          "optim.beta1", to_double, [](double v) { return v >= 0.0 && v < 1.0; },
          "must lie in [0, 1)", opt.adafactor.beta1);
      nonneg_double("optim.eps1", opt.adafactor.eps1);
      positive_double("optim.eps2", opt.adafactor.eps2);
      if (const auto e = take("optim.clip_d")) {
        const auto v = to_double(e->value);
        if (!v || *v < 0.0)
          fail(e->line, "value for 'optim.clip_d' must be >= 0 (0 disables)");
        else
          opt.adafactor.clip = *v == 0.0 ? ClipConfig::disabled()
                                         : ClipConfig::threshold(*v);
      }
      // Decay-rate schedule.
      DecaySchedule decay = DecaySchedule::increasing(0.8);
      if (const auto e = take("decay.kind")) {
        if (e->value == "increasing")
          decay.kind = DecayKind::Increasing;
        else if (e->value == "constant-bias-corrected")
          decay.kind = DecayKind::ConstantBiasCorrected;
        else
          fail(e->line,
               "value for 'decay.kind' must be increasing or constant-bias-corrected");
      }
      unit_open_double("decay.beta2", decay.beta2);
      positive_double("decay.c", decay.c);
      opt.adafactor.decay = decay;
    }

    // Step-size schedule; adafactor consumes it as the relative schedule.
    StepSizeSchedule sched;
    sched.kind = adafactor ? StepSizeKind::RelativeFlat : StepSizeKind::AbsoluteFlat;
    sched.scale = adafactor ? 1.0 : (kind == OptimizerKind::Sgd ? 10.0 : 0.1);
    if (const auto e = take("schedule.kind")) {
      if (e->value == "absolute-warmup")
        sched.kind = StepSizeKind::AbsoluteWarmup;
      else if (e->value == "absolute-flat")
        sched.kind = StepSizeKind::AbsoluteFlat;
      else if (e->value == "relative-warmup")
        sched.kind = StepSizeKind::RelativeWarmup;
      else if (e->value == "relative-flat")
        sched.kind = StepSizeKind::RelativeFlat;
      else if (e->value == "constant")
        sched.kind = StepSizeKind::ConstantMultiple;
      else
        fail(e->line, "value for 'schedule.kind' must be absolute-warmup, "
                      "absolute-flat, relative-warmup, relative-flat or constant");
    }
    positive_double("schedule.scale", sched.scale);
    positive_double("schedule.warmup_slope", sched.warmup_slope);
    positive_double("schedule.cap", sched.cap);
    if (adafactor)
      opt.adafactor.rho = sched;
    else
      opt.alpha = sched;
  }

  std::map<std::string, Entry> entries_;
  std::vector<std::string> errors_;
};

std::string format_double_value(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

void append_schedule(std::ostringstream& out, const StepSizeSchedule& s) {
  const char* kind = nullptr;
  switch (s.kind) {
    case StepSizeKind::AbsoluteWarmup: kind = "absolute-warmup"; break;
    case StepSizeKind::AbsoluteFlat: kind = "absolute-flat"; break;
    case StepSizeKind::RelativeWarmup: kind = "relative-warmup"; break;
    case StepSizeKind::RelativeFlat: kind = "relative-flat"; break;
    case StepSizeKind::ConstantMultiple: kind = "constant"; break;
  }
  out << "schedule.kind=" << kind << "\n";
  out << "schedule.scale=" << format_double_value(s.scale) << "\n";
  out << "schedule.warmup_slope=" << format_double_value(s.warmup_slope) << "\n";
  out << "schedule.cap=" << format_double_value(s.cap) << "\n";
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ConfigParse parse_config(std::string_view text) { return Parser(text).run(); }

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "problem.name=" << problem_name << "\n";
  if (const auto* p = std::get_if<QuadParams>(&problem)) {
    out << "problem.n=" << p->n << "\n";
    out << "problem.cond=" << format_double_value(p->cond) << "\n";
    out << "problem.noise=" << format_double_value(p->noise) << "\n";
    out << "problem.init_rms=" << format_double_value(p->init_rms) << "\n";
  } else if (const auto* p = std::get_if<LogregParams>(&problem)) {
    out << "problem.features=" << p->features << "\n";
    out << "problem.examples=" << p->examples << "\n";
    out << "problem.batch=" << p->batch << "\n";
    out << "problem.classes=" << p->classes << "\n";
  } else if (const auto* p = std::get_if<MlpParams>(&problem)) {
    out << "problem.d_in=" << p->d_in << "\n";
    out << "problem.d_hidden=" << p->d_hidden << "\n";
    out << "problem.d_out=" << p->d_out << "\n";
    out << "problem.examples=" << p->examples << "\n";
    out << "problem.target_noise=" << format_double_value(p->target_noise) << "\n";
  } else if (const auto* p = std::get_if<EmbedParams>(&problem)) {
    out << "problem.d_model=" << p->d_model << "\n";
    out << "problem.vocab=" << p->vocab << "\n";
    out << "problem.batch=" << p->batch << "\n";
    out << "problem.variant="
        << (p->variant == EmbeddingVariant::Scaled
                ? "scaled"
                : p->variant == EmbeddingVariant::UnitInit ? "unit-init"
                                                           : "small-init")
        << "\n";
  } else if (const auto* p = std::get_if<StreamJumpParams>(&problem)) {
    out << "problem.t_jump=" << p->t_jump << "\n";
    out << "problem.low=" << format_double_value(p->low) << "\n";
    out << "problem.high=" << format_double_value(p->high) << "\n";
    out << "problem.rows=" << p->rows << "\n";
    out << "problem.cols=" << p->cols << "\n";
  }

  out << "optim.kind=" << to_string(optimizer.kind) << "\n";
  if (optimizer.kind == OptimizerKind::Adafactor) {
    out << "optim.beta1=" << format_double_value(optimizer.adafactor.beta1) << "\n";
    out << "optim.eps1=" << format_double_value(optimizer.adafactor.eps1) << "\n";
    out << "optim.eps2=" << format_double_value(optimizer.adafactor.eps2) << "\n";
    out << "optim.clip_d="
        << format_double_value(optimizer.adafactor.clip.enabled
                                   ? optimizer.adafactor.clip.d
                                   : 0.0)
        << "\n";
    const DecaySchedule& d = optimizer.adafactor.decay;
    out << "decay.kind="
        << (d.kind == DecayKind::Increasing ? "increasing" : "constant-bias-corrected")
        << "\n";
    out << "decay.beta2=" << format_double_value(d.beta2) << "\n";
    out << "decay.c=" << format_double_value(d.c) << "\n";
    append_schedule(out, optimizer.adafactor.rho);
  } else if (optimizer.kind != OptimizerKind::Sgd) {
    out << "optim.beta1=" << format_double_value(optimizer.adam.beta1) << "\n";
    out << "optim.beta2=" << format_double_value(optimizer.adam.beta2) << "\n";
    out << "optim.eps=" << format_double_value(optimizer.adam.eps) << "\n";
    append_schedule(out, optimizer.alpha);
  } else {
    append_schedule(out, optimizer.alpha);
  }

  out << "run.steps=" << steps << "\n";
  out << "run.seed=" << seed << "\n";
  out << "run.trace_every=" << trace_every << "\n";
  if (checkpoint_path) {
    out << "run.checkpoint=" << *checkpoint_path << "\n";
    if (checkpoint_at > 0) out << "run.checkpoint_at=" << checkpoint_at << "\n";
  }
  return out.str();
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(canonical_text()); }

std::unique_ptr<Problem> ExperimentConfig::instantiate_problem() const {
  if (const auto* p = std::get_if<QuadParams>(&problem))
    return make_quadratic_bowl(p->n, p->cond, p->noise, seed, p->init_rms);
  if (const auto* p = std::get_if<LogregParams>(&problem))
    return make_logistic_regression(p->features, p->examples, p->batch, seed,
                                    p->classes);
  if (const auto* p = std::get_if<MlpParams>(&problem))
    return make_two_layer_net(p->d_in, p->d_hidden, p->d_out, seed, p->examples,
                              p->target_noise);
  if (const auto* p = std::get_if<EmbedParams>(&problem))
    return make_embedding_scale(p->d_model, p->variant, seed, p->vocab, p->batch);
  const auto& p = std::get<StreamJumpParams>(problem);
  return make_stream_problem(
      "stream-jump", make_scale_jump_stream(p.t_jump, p.low, p.high, p.rows, p.cols),
      p.rows, p.cols);
}

}  // namespace factopt
