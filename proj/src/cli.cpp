#include "factopt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "factopt/experiment.hpp"
#include "factopt/trace.hpp"

namespace factopt {

namespace {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kConfigError = 2, kDiverged = 3, kIoError = 4 };

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int report_parse_errors(const std::string& what, const ConfigParse& parsed) {
  std::cerr << what << ":\n";
  for (const std::string& e : parsed.errors) std::cerr << "  " << e << "\n";
  return kConfigError;
}

void print_memory_report(const ExperimentConfig& cfg) {
  const auto problem = cfg.instantiate_problem();
  const auto& slots = problem->initial_slots();
  const double beta1 = cfg.optimizer.kind == OptimizerKind::Adafactor
                           ? cfg.optimizer.adafactor.beta1
                           : cfg.optimizer.adam.beta1;
  const MemoryReport report = memory_footprint(cfg.optimizer.kind, beta1, slots);
  std::cout << "memory accounting (" << to_string(cfg.optimizer.kind) << "):\n";
  for (const auto& s : report.slots) {
    const char* kind = s.kind == SlotKind::Matrix   ? "matrix"
                       : s.kind == SlotKind::Vector ? "vector"
                                                    : "scalar";
    std::cout << "  " << s.name << " (" << kind << "): " << s.param_count
              << " params, " << s.aux_count << " aux values\n";
  }
  std::cout << "  total: " << report.total_params << " params, " << report.total_aux
            << " aux values\n";
}

struct RowSummary {
  std::string config;
  std::string optimizer;
  std::string decay;
  std::string clip;
  std::string schedule;
  std::string final_loss;
  std::string status;
};

std::string describe_decay(const ExperimentConfig& cfg) {
  if (cfg.optimizer.kind == OptimizerKind::Adafactor) {
    const DecaySchedule& d = cfg.optimizer.adafactor.decay;
    if (d.kind == DecayKind::Increasing)
      return "1-t^-" + TraceWriter::format_double(d.c);
    return "beta2=" + TraceWriter::format_double(d.beta2);
  }
  if (cfg.optimizer.kind == OptimizerKind::Sgd) return "-";
  return "beta2=" + TraceWriter::format_double(cfg.optimizer.adam.beta2);
}

std::string describe_clip(const ExperimentConfig& cfg) {
  if (cfg.optimizer.kind != OptimizerKind::Adafactor) return "-";
  const ClipConfig& c = cfg.optimizer.adafactor.clip;
  return c.enabled ? "d=" + TraceWriter::format_double(c.d) : "off";
}

std::string describe_schedule(const ExperimentConfig& cfg) {
  const StepSizeSchedule& s = cfg.optimizer.kind == OptimizerKind::Adafactor
                                  ? cfg.optimizer.adafactor.rho
                                  : cfg.optimizer.alpha;
  std::string kind;
  switch (s.kind) {
    case StepSizeKind::AbsoluteWarmup: kind = "warmup"; break;
    case StepSizeKind::AbsoluteFlat: kind = "flat"; break;
    case StepSizeKind::RelativeWarmup: kind = "rel-warmup"; break;
    case StepSizeKind::RelativeFlat: kind = "rel-flat"; break;
    case StepSizeKind::ConstantMultiple: kind = "constant"; break;
  }
  return kind + " x" + TraceWriter::format_double(s.scale);
}

int run_one(const ExperimentConfig& cfg, const std::string& trace_path,
            bool print_memory, RunOutcome* outcome_out) {
  if (print_memory) print_memory_report(cfg);
  RunOutcome outcome;
  try {
    outcome = run_experiment(cfg, RunOptions{trace_path, std::nullopt});
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  if (outcome_out) *outcome_out = outcome;
  std::cout << (outcome.diverged() ? "diverged" : "completed") << " after "
            << outcome.steps_done << " steps, loss "
            << TraceWriter::format_double(outcome.final_loss) << ", trace "
            << trace_path << "\n";
  return outcome.diverged() ? kDiverged : kOk;
}

int cmd_run(const std::string& config_path, const std::string& trace_out,
            std::int64_t steps_flag, std::int64_t seed_flag) {
  const auto text = read_file(config_path);
  if (!text) {
    std::cerr << "error: cannot read config file '" << config_path << "'\n";
    return kIoError;
  }
  ConfigParse parsed = parse_config(*text);
  if (!parsed.ok())
    return report_parse_errors("invalid config '" + config_path + "'", parsed);
  ExperimentConfig cfg = std::move(*parsed.config);
  if (steps_flag == 0) {
    std::cerr << "error: --steps must be positive\n";
    return kConfigError;
  }
  if (steps_flag > 0) cfg.steps = steps_flag;
  if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
  return run_one(cfg, trace_out, true, nullptr);
}

int cmd_sweep(const std::string& dir, std::string trace_dir,
              const std::string& summary_out) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    std::cerr << "error: '" << dir << "' is not a directory\n";
    return kIoError;
  }
  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".cfg")
      configs.push_back(entry.path());
  if (ec) {
    std::cerr << "error: cannot list '" << dir << "'\n";
    return kIoError;
  }
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    std::cerr << "error: no .cfg files in '" << dir << "'\n";
    return kConfigError;
  }
  if (trace_dir.empty()) trace_dir = dir;
  fs::create_directories(trace_dir, ec);

  std::vector<RowSummary> rows;
  bool any_config_error = false, any_io_error = false;
  for (const fs::path& path : configs) {
    RowSummary row;
    row.config = path.stem().string();
    const auto text = read_file(path.string());
    if (!text) {
      any_io_error = true;
      row.status = "io-error";
      rows.push_back(row);
      continue;
    }
    ConfigParse parsed = parse_config(*text);
    if (!parsed.ok()) {
      any_config_error = true;
      report_parse_errors("invalid config '" + path.string() + "'", parsed);
      row.status = "config-error";
      rows.push_back(row);
      continue;
    }
    const ExperimentConfig& cfg = *parsed.config;
    row.optimizer = to_string(cfg.optimizer.kind);
    row.decay = describe_decay(cfg);
    row.clip = describe_clip(cfg);
    row.schedule = describe_schedule(cfg);
    const std::string trace_path =
        (fs::path(trace_dir) / (path.stem().string() + ".trace.csv")).string();
    RunOutcome outcome;
    try {
      outcome = run_experiment(cfg, RunOptions{trace_path, std::nullopt});
      row.final_loss = TraceWriter::format_double(outcome.final_loss);
      row.status = outcome.diverged() ? "diverged" : "ok";
    } catch (const std::runtime_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      any_io_error = true;
      row.status = "io-error";
    }
    rows.push_back(row);
  }

  // Aligned summary table.
  const char* headers[7] = {"config", "optimizer", "decay",  "clip",
                            "schedule", "final_loss", "status"};
  std::vector<std::size_t> width(7);
  for (int c = 0; c < 7; ++c) width[c] = std::string(headers[c]).size();
  auto cells = [](const RowSummary& r) {
    return std::array<const std::string*, 7>{&r.config, &r.optimizer, &r.decay,
                                             &r.clip, &r.schedule, &r.final_loss,
                                             &r.status};
  };
  for (const auto& r : rows) {
    auto cs = cells(r);
    for (int c = 0; c < 7; ++c) width[c] = std::max(width[c], cs[c]->size());
  }
  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  for (int c = 0; c < 7; ++c)
    std::cout << pad(headers[c], width[c]) << (c == 6 ? "\n" : "  ");
  for (const auto& r : rows) {
    auto cs = cells(r);
    for (int c = 0; c < 7; ++c)
      std::cout << pad(*cs[c], width[c]) << (c == 6 ? "\n" : "  ");
  }

  if (!summary_out.empty()) {
    std::ofstream out(summary_out, std::ios::binary | std::ios::trunc);
    if (!out) {
      std::cerr << "error: cannot open '" << summary_out << "'\n";
      return kIoError;
    }
    out << "config,optimizer,decay,clip,schedule,final_loss,status\n";
    for (const auto& r : rows) {
      auto cs = cells(r);
      for (int c = 0; c < 7; ++c) out << *cs[c] << (c == 6 ? "\n" : ",");
    }
  }

  if (any_config_error) return kConfigError;
  if (any_io_error) return kIoError;
  return kOk;
}

int cmd_resume(const std::string& checkpoint_path, const std::string& config_path,
               bool allow_mismatch, const std::string& trace_out,
               std::int64_t steps_flag) {
  CheckpointData data;
  try {
    data = load_checkpoint(checkpoint_path);
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }

  std::string config_text = data.config_text;
  if (!config_path.empty()) {
    const auto text = read_file(config_path);
    if (!text) {
      std::cerr << "error: cannot read config file '" << config_path << "'\n";
      return kIoError;
    }
    config_text = *text;
  }
  ConfigParse parsed = parse_config(config_text);
  if (!parsed.ok()) return report_parse_errors("invalid config", parsed);
  ExperimentConfig cfg = std::move(*parsed.config);

  if (!config_path.empty() && cfg.config_hash() != data.config_hash) {
    if (!allow_mismatch) {
      std::cerr << "error: config does not match the checkpointed run (hash "
                   "mismatch); pass --allow-config-mismatch to continue anyway\n";
      return kConfigError;
    }
    std::cerr << "warning: config hash mismatch, continuing as requested\n";
  }

  if (steps_flag > 0) cfg.steps = steps_flag;
  if (cfg.steps <= data.step) {
    std::cerr << "error: checkpoint is already at step " << data.step
              << "; nothing to resume (target " << cfg.steps << ")\n";
    return kConfigError;
  }

  RunOptions opts;
  opts.trace_path = trace_out;
  opts.resume = std::move(data);
  RunOutcome outcome;
  try {
    outcome = run_experiment(cfg, opts);
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  std::cout << (outcome.diverged() ? "diverged" : "completed") << " after "
            << outcome.steps_done << " steps, loss "
            << TraceWriter::format_double(outcome.final_loss) << ", trace "
            << trace_out << "\n";
  return outcome.diverged() ? kDiverged : kOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"optimizer experiment runner"};
  app.require_subcommand(1);

  std::string config_path, trace_out = "trace.csv";
  std::int64_t steps_flag = -1;
  std::int64_t seed_flag = -1;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--trace-out", trace_out, "trace CSV path");
  run->add_option("--steps", steps_flag, "override run.steps");
  run->add_option("--seed", seed_flag, "override run.seed");

  std::string sweep_dir, sweep_trace_dir, sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "run every .cfg in a directory");
  sweep->add_option("dir", sweep_dir, "config directory")->required();
  sweep->add_option("--trace-dir", sweep_trace_dir, "where trace files go");
  sweep->add_option("--out", sweep_out, "summary CSV path");

  std::string ckpt_path, resume_config;
  bool allow_mismatch = false;
  CLI::App* resume = app.add_subcommand("resume", "continue from a checkpoint");
  resume->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  resume->add_option("--config", resume_config, "config file to check against");
  resume->add_flag("--allow-config-mismatch", allow_mismatch,
                   "proceed despite a config hash mismatch");
  resume->add_option("--trace-out", trace_out, "trace CSV path");
  resume->add_option("--steps", steps_flag, "new total step count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  if (run->parsed()) return cmd_run(config_path, trace_out, steps_flag, seed_flag);
  if (sweep->parsed()) return cmd_sweep(sweep_dir, sweep_trace_dir, sweep_out);
  return cmd_resume(ckpt_path, resume_config, allow_mismatch, trace_out, steps_flag);
}

}  // namespace factopt
