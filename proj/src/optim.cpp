#include "factopt/optim.hpp"

#include <algorithm>
#include <cmath>

#include "factopt/kernels.hpp"

namespace factopt {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": size mismatch");
}

template <typename State>
void check_momentum(double beta1, const State& st, const char* what) {
  if (beta1 > 0.0 && !st.m)
    throw std::invalid_argument(std::string(what) + ": state lacks momentum buffer");
}

void require_finite(const TensorValue& g, const ParamSlot& slot) {
  if (!all_finite(g)) throw NonFiniteGradientError(slot.name());
}

double ratio_rms(std::span<const double> g, std::span<const double> vhat) {
  std::vector<double> ratio(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    ratio[i] = (g[i] == 0.0 && vhat[i] == 0.0) ? 0.0 : g[i] * g[i] / vhat[i];
  return std::sqrt(kernels::sum(ratio) / static_cast<double>(ratio.size()));
}

bool clip_with_rms(std::span<double> u, const ClipConfig& cfg, double rms_u) {
  if (!cfg.enabled) return false;
  const double denom = std::max(1.0, rms_u / cfg.d);
  if (denom <= 1.0) return false;  // within threshold: left bit-identical
  kernels::scale(u, 1.0 / denom);
  return true;
}

// Corrected decay rate beta * (1 - beta^(t-1)) / (1 - beta^t); zero at t = 1.
double corrected_decay(double beta, std::int64_t t) {
  if (beta == 0.0) return 0.0;
  const double td = static_cast<double>(t);
  return beta * (1.0 - std::pow(beta, td - 1.0)) / (1.0 - std::pow(beta, td));
}

void fill_diag(StepDiagnostics* diag, double rms_u, std::span<const double> x,
               double alpha, bool clipped) {
  if (!diag) return;
  diag->rms_u = rms_u;
  diag->rms_x = kernels::rms(x);
  diag->alpha = alpha;
  diag->clipped = clipped;
}

}  // namespace

SlotKind kind_of(const TensorValue& v) {
  switch (v.index()) {
    case 0: return SlotKind::Scalar;
    case 1: return SlotKind::Vector;
    default: return SlotKind::Matrix;
  }
}

std::size_t numel(const TensorValue& v) {
  return std::visit(
      [](const auto& x) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>)
          return 1;
        else
          return x.size();
      },
      v);
}

std::span<double> flat(TensorValue& v) {
  return std::visit(
      [](auto& x) -> std::span<double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>)
          return {&x, 1};
        else
          return x.flat();
      },
      v);
}

std::span<const double> flat(const TensorValue& v) {
  return std::visit(
      [](const auto& x) -> std::span<const double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>)
          return {&x, 1};
        else
          return x.flat();
      },
      v);
}

double rms(const TensorValue& v) { return kernels::rms(flat(v)); }
bool all_finite(const TensorValue& v) { return kernels::all_finite(flat(v)); }

std::size_t ParamSlot::rows() const {
  switch (kind()) {
    case SlotKind::Matrix: return matrix().rows();
    case SlotKind::Vector: return std::get<DenseVector>(value_).size();
    default: return 1;
  }
}

std::size_t ParamSlot::cols() const {
  return kind() == SlotKind::Matrix ? matrix().cols() : 1;
}

AdamState make_adam_state(const ParamSlot& slot, bool with_momentum) {
  AdamState st;
  st.v = DenseVector(slot.numel());
  if (with_momentum) st.m = DenseVector(slot.numel());
  return st;
}

FactoredState make_factored_state(const ParamSlot& slot, bool with_momentum) {
  if (slot.kind() != SlotKind::Matrix)
    throw std::invalid_argument("factored state requires a matrix slot");
  FactoredState st;
  st.r = DenseVector(slot.rows());
  st.c = DenseVector(slot.cols());
  if (with_momentum) st.m = DenseMatrix(slot.rows(), slot.cols());
  return st;
}

VectorState make_vector_state(const ParamSlot& slot, bool with_momentum) {
  VectorState st;
  st.vhat = DenseVector(slot.numel());
  if (with_momentum) st.m = DenseVector(slot.numel());
  return st;
}

MeanState make_mean_state(const ParamSlot& slot, bool row_wise) {
  if (slot.kind() != SlotKind::Matrix)
    throw std::invalid_argument("mean-estimator state requires a matrix slot");
  MeanState st;
  st.mean = DenseVector(row_wise ? slot.rows() : slot.cols());
  return st;
}

void adam_step(ParamSlot& slot, const TensorValue& g, AdamState& st,
               double alpha, const AdamConfig& cfg, StepDiagnostics* diag) {
  const auto gf = flat(g);
  check_sizes(gf.size(), slot.numel(), "adam_step");
  check_sizes(st.v.size(), slot.numel(), "adam_step state");
  check_momentum(cfg.beta1, st, "adam_step");
  require_finite(g, slot);
  const std::int64_t t = st.t + 1;

  if (cfg.beta1 > 0.0) kernels::ema_update(st.m->flat(), gf, cfg.beta1);
  std::vector<double> gsq(gf.size());
  kernels::square(gf, gsq);
  kernels::ema_update(st.v.flat(), gsq, cfg.beta2);

  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  std::vector<double> vhat(st.v.flat().begin(), st.v.flat().end());
  kernels::scale(vhat, 1.0 / bc2);

  std::vector<double> mhat(gf.begin(), gf.end());
  if (cfg.beta1 > 0.0) {
    std::copy(st.m->flat().begin(), st.m->flat().end(), mhat.begin());
    kernels::scale(mhat, 1.0 / bc1);
  }

  std::vector<double> denom(vhat.size());
  kernels::sqrt_elems(vhat, denom);
  kernels::add_scalar(denom, cfg.eps);
  std::vector<double> upd(vhat.size());
  kernels::divide(mhat, denom, upd);
  kernels::axpy(-alpha, upd, slot.flat());

  st.t = t;
  fill_diag(diag, ratio_rms(gf, vhat), slot.flat(), alpha, false);
}

void adam_equivalent_step(ParamSlot& slot, const TensorValue& g, AdamState& st,
                          double alpha, const AdamConfig& cfg,
                          StepDiagnostics* diag) {
  const auto gf = flat(g);
  check_sizes(gf.size(), slot.numel(), "adam_equivalent_step");
  check_sizes(st.v.size(), slot.numel(), "adam_equivalent_step state");
  check_momentum(cfg.beta1, st, "adam_equivalent_step");
  require_finite(g, slot);
  const std::int64_t t = st.t + 1;

  // The accumulators hold the bias-corrected values directly; the per-step
  // decay rates absorb the corrections.
  const double b1h = corrected_decay(cfg.beta1, t);
  const double b2h = corrected_decay(cfg.beta2, t);

  if (cfg.beta1 > 0.0) kernels::ema_update(st.m->flat(), gf, b1h);
  std::vector<double> gsq(gf.size());
  kernels::square(gf, gsq);
  kernels::ema_update(st.v.flat(), gsq, b2h);

  std::vector<double> denom(gf.size());
  kernels::sqrt_elems(st.v.flat(), denom);
  kernels::add_scalar(denom, cfg.eps);
  std::vector<double> upd(gf.size());
  if (cfg.beta1 > 0.0)
    kernels::divide(st.m->flat(), denom, upd);
  else
    kernels::divide(gf, denom, upd);
  kernels::axpy(-alpha, upd, slot.flat());

  st.t = t;
  fill_diag(diag, ratio_rms(gf, st.v.flat()), slot.flat(), alpha, false);
}

void factored_adam_step(ParamSlot& slot, const DenseMatrix& g, FactoredState& st,
                        double alpha, double beta2, double eps,
                        StepDiagnostics* diag) {
  if (slot.kind() != SlotKind::Matrix)
    throw std::invalid_argument("factored_adam_step: matrix slot required");
  const std::size_t n = slot.rows(), m = slot.cols();
  if (g.rows() != n || g.cols() != m)
    throw std::invalid_argument("factored_adam_step: gradient shape mismatch");
  check_sizes(st.r.size(), n, "factored_adam_step state");
  check_sizes(st.c.size(), m, "factored_adam_step state");
  if (!kernels::all_finite(g.flat())) throw NonFiniteGradientError(slot.name());
  const std::int64_t t = st.t + 1;

  std::vector<double> gsq(g.size());
  kernels::square(g.flat(), gsq);
  std::vector<double> rs(n), cs(m);
  kernels::row_sums(gsq, n, m, rs);
  kernels::col_sums(gsq, n, m, cs);
  kernels::ema_update(st.r.flat(), rs, beta2);
  kernels::ema_update(st.c.flat(), cs, beta2);

  const double total = kernels::sum(st.r.flat());
  st.t = t;
  if (total == 0.0) {
    // No squared-gradient mass yet, which forces a zero gradient now too.
    fill_diag(diag, 0.0, slot.flat(), alpha, false);
    return;
  }

  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  std::vector<double> vhat(g.size());
  kernels::outer_scaled(st.r.flat(), st.c.flat(), 1.0 / total, vhat);
  kernels::scale(vhat, 1.0 / bc2);

  std::vector<double> denom(g.size());
  kernels::sqrt_elems(vhat, denom);
  kernels::add_scalar(denom, eps);
  std::vector<double> upd(g.size());
  kernels::divide(g.flat(), denom, upd);
  kernels::axpy(-alpha, upd, slot.flat());

  fill_diag(diag, ratio_rms(g.flat(), vhat), slot.flat(), alpha, false);
}

void mean_estimator_step(MeanVariant variant, ParamSlot& slot,
                         const DenseMatrix& g, MeanState& st, double alpha,
                         double beta2, double eps, StepDiagnostics* diag) {
  if (slot.kind() != SlotKind::Matrix)
    throw std::invalid_argument("mean_estimator_step: matrix slot required");
  const std::size_t n = slot.rows(), m = slot.cols();
  if (g.rows() != n || g.cols() != m)
    throw std::invalid_argument("mean_estimator_step: gradient shape mismatch");
  if (!kernels::all_finite(g.flat())) throw NonFiniteGradientError(slot.name());
  const std::int64_t t = st.t + 1;

  const bool row_wise = variant == MeanVariant::RowMean;
  check_sizes(st.mean.size(), row_wise ? n : m, "mean_estimator_step state");

  std::vector<double> gsq(g.size());
  kernels::square(g.flat(), gsq);
  std::vector<double> means(st.mean.size());
  if (row_wise) {
    kernels::row_sums(gsq, n, m, means);
    kernels::scale(means, 1.0 / static_cast<double>(m));
  } else {
    kernels::col_sums(gsq, n, m, means);
    kernels::scale(means, 1.0 / static_cast<double>(n));
  }
  kernels::ema_update(st.mean.flat(), means, beta2);

  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  std::vector<double> ones(row_wise ? m : n, 1.0);
  std::vector<double> vhat(g.size());
  if (row_wise)
    kernels::outer_scaled(st.mean.flat(), ones, 1.0 / bc2, vhat);
  else
    kernels::outer_scaled(ones, st.mean.flat(), 1.0 / bc2, vhat);

  std::vector<double> denom(g.size());
  kernels::sqrt_elems(vhat, denom);
  kernels::add_scalar(denom, eps);
  std::vector<double> upd(g.size());
  kernels::divide(g.flat(), denom, upd);
  kernels::axpy(-alpha, upd, slot.flat());

  st.t = t;
  fill_diag(diag, ratio_rms(g.flat(), vhat), slot.flat(), alpha, false);
}

double unscaled_update_rms(const TensorValue& g, const TensorValue& vhat) {
  const auto gf = flat(g);
  const auto vf = flat(vhat);
  check_sizes(gf.size(), vf.size(), "unscaled_update_rms");
  return ratio_rms(gf, vf);
}

bool clip_update(std::span<double> u, const ClipConfig& cfg) {
  if (!cfg.enabled) return false;
  return clip_with_rms(u, cfg, kernels::rms(u));
}

void adafactor_matrix_step(ParamSlot& slot, const DenseMatrix& g,
                           FactoredState& st, const AdafactorConfig& cfg,
                           StepDiagnostics* diag) {
  if (slot.kind() != SlotKind::Matrix)
    throw std::invalid_argument("adafactor_matrix_step: matrix slot required");
  const std::size_t n = slot.rows(), m = slot.cols();
  if (g.rows() != n || g.cols() != m)
    throw std::invalid_argument("adafactor_matrix_step: gradient shape mismatch");
  check_sizes(st.r.size(), n, "adafactor_matrix_step state");
  check_sizes(st.c.size(), m, "adafactor_matrix_step state");
  check_momentum(cfg.beta1, st, "adafactor_matrix_step");
  if (!kernels::all_finite(g.flat())) throw NonFiniteGradientError(slot.name());
  const std::int64_t t = st.t + 1;

  const double rho = cfg.rho.at(t);
  const double alpha = relative_step_size(rho, kernels::rms(slot.flat()), cfg.eps2);
  const double b2h = cfg.decay.at(t);

  std::vector<double> gsq(g.size());
  kernels::square(g.flat(), gsq);
  kernels::add_scalar(gsq, cfg.eps1);
  std::vector<double> rs(n), cs(m);
  kernels::row_sums(gsq, n, m, rs);
  kernels::col_sums(gsq, n, m, cs);
  kernels::ema_update(st.r.flat(), rs, b2h);
  kernels::ema_update(st.c.flat(), cs, b2h);

  const double total = kernels::sum(st.r.flat());
  st.t = t;
  if (total == 0.0) {
    fill_diag(diag, 0.0, slot.flat(), alpha, false);
    return;
  }

  std::vector<double> vhat(g.size());
  kernels::outer_scaled(st.r.flat(), st.c.flat(), 1.0 / total, vhat);
  std::vector<double> u(g.size());
  kernels::div_by_sqrt(g.flat(), vhat, u);

  const double rms_u = kernels::rms(u);
  const bool clipped = clip_with_rms(u, cfg.clip, rms_u);

  std::span<const double> update = u;
  if (cfg.beta1 > 0.0) {
    // Momentum smooths the clipped update with the corrected decay rate,
    // before the step-size multiply.
    kernels::ema_update(st.m->flat(), u, corrected_decay(cfg.beta1, t));
    update = st.m->flat();
  }
  kernels::axpy(-alpha, update, slot.flat());

  fill_diag(diag, rms_u, slot.flat(), alpha, clipped);
}

void adafactor_vector_step(ParamSlot& slot, const TensorValue& g,
                           VectorState& st, const AdafactorConfig& cfg,
                           StepDiagnostics* diag) {
  if (slot.kind() == SlotKind::Matrix)
    throw std::invalid_argument("adafactor_vector_step: vector or scalar slot required");
  const auto gf = flat(g);
  check_sizes(gf.size(), slot.numel(), "adafactor_vector_step");
  check_sizes(st.vhat.size(), slot.numel(), "adafactor_vector_step state");
  check_momentum(cfg.beta1, st, "adafactor_vector_step");
  require_finite(g, slot);
  const std::int64_t t = st.t + 1;

  const double rho = cfg.rho.at(t);
  const double alpha = relative_step_size(rho, kernels::rms(slot.flat()), cfg.eps2);
  const double b2h = cfg.decay.at(t);

  std::vector<double> gsq(gf.size());
  kernels::square(gf, gsq);
  kernels::add_scalar(gsq, cfg.eps1);
  kernels::ema_update(st.vhat.flat(), gsq, b2h);

  std::vector<double> u(gf.size());
  kernels::div_by_sqrt(gf, st.vhat.flat(), u);

  const double rms_u = kernels::rms(u);
  const bool clipped = clip_with_rms(u, cfg.clip, rms_u);

  std::span<const double> update = u;
  if (cfg.beta1 > 0.0) {
    kernels::ema_update(st.m->flat(), u, corrected_decay(cfg.beta1, t));
    update = st.m->flat();
  }
  kernels::axpy(-alpha, update, slot.flat());

  st.t = t;
  fill_diag(diag, rms_u, slot.flat(), alpha, clipped);
}

void sgd_step(ParamSlot& slot, const TensorValue& g, double lr,
              StepDiagnostics* diag) {
  const auto gf = flat(g);
  check_sizes(gf.size(), slot.numel(), "sgd_step");
  kernels::axpy(-lr, gf, slot.flat());
  fill_diag(diag, kernels::rms(gf), slot.flat(), lr, false);
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::AdamEquivalent: return "adam-equiv";
    case OptimizerKind::AdamFactored: return "adam-factored";
    case OptimizerKind::AdamRowMean: return "adam-rowmean";
    case OptimizerKind::AdamColMean: return "adam-colmean";
    case OptimizerKind::Adafactor: return "adafactor";
  }
  return "?";
}

MemoryReport memory_footprint(OptimizerKind kind, double beta1,
                              std::span<const ParamSlot> slots) {
  MemoryReport report;
  for (const ParamSlot& slot : slots) {
    const std::size_t p = slot.numel();
    const bool matrix = slot.kind() == SlotKind::Matrix;
    std::size_t aux = 0;
    switch (kind) {
      case OptimizerKind::Sgd:
        aux = 0;
        break;
      case OptimizerKind::Adam:
      case OptimizerKind::AdamEquivalent:
        aux = beta1 > 0.0 ? 2 * p : p;
        break;
      case OptimizerKind::AdamFactored:
        aux = matrix ? slot.rows() + slot.cols() : p;
        break;
      case OptimizerKind::AdamRowMean:
        aux = matrix ? slot.rows() : p;
        break;
      case OptimizerKind::AdamColMean:
        aux = matrix ? slot.cols() : p;
        break;
      case OptimizerKind::Adafactor:
        aux = (matrix ? slot.rows() + slot.cols() : p) + (beta1 > 0.0 ? p : 0);
        break;
    }
    report.slots.push_back({slot.name(), slot.kind(), p, aux});
    report.total_params += p;
    report.total_aux += aux;
  }
  return report;
}

}  // namespace factopt
