#include "factopt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace factopt {

namespace {

void check_step(std::int64_t t) {
  if (t < 1) throw std::invalid_argument("schedule: step index must be >= 1");
}

}  // namespace

StepSizeSchedule StepSizeSchedule::absolute_warmup(double scale) {
  return {StepSizeKind::AbsoluteWarmup, scale, 1e-6, 1e-2};
}
StepSizeSchedule StepSizeSchedule::absolute_flat(double scale) {
  return {StepSizeKind::AbsoluteFlat, scale, 1e-6, 1e-2};
}
StepSizeSchedule StepSizeSchedule::relative_warmup() {
  return {StepSizeKind::RelativeWarmup, 1.0, 1e-6, 1e-2};
}
StepSizeSchedule StepSizeSchedule::relative_flat() {
  return {StepSizeKind::RelativeFlat, 1.0, 1e-6, 1e-2};
}
StepSizeSchedule StepSizeSchedule::constant(double scale) {
  return {StepSizeKind::ConstantMultiple, scale, 1e-6, 1e-2};
}

double StepSizeSchedule::at(std::int64_t t) const {
  check_step(t);
  const double td = static_cast<double>(t);
  const double inv_sqrt = 1.0 / std::sqrt(td);
  switch (kind) {
    case StepSizeKind::AbsoluteWarmup:
    case StepSizeKind::RelativeWarmup:
      return scale * std::min(warmup_slope * td, inv_sqrt);
    case StepSizeKind::AbsoluteFlat:
    case StepSizeKind::RelativeFlat:
      return scale * std::min(cap, inv_sqrt);
    case StepSizeKind::ConstantMultiple:
      return scale;
  }
  throw std::logic_error("unreachable");
}

DecaySchedule DecaySchedule::bias_corrected(double beta2) {
  DecaySchedule s{DecayKind::ConstantBiasCorrected, beta2, 0.8};
  s.validate();
  return s;
}

DecaySchedule DecaySchedule::increasing(double c) {
  DecaySchedule s{DecayKind::Increasing, 0.999, c};
  s.validate();
  return s;
}

void DecaySchedule::validate() const {
  if (kind == DecayKind::ConstantBiasCorrected && !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("decay: beta2 must lie in (0, 1)");
  if (kind == DecayKind::Increasing && !(c > 0.0))
    throw std::invalid_argument("decay: c must be positive");
}

double DecaySchedule::at(std::int64_t t) const {
  check_step(t);
  if (kind == DecayKind::Increasing)
    return 1.0 - std::pow(static_cast<double>(t), -c);
  // At t = 1 the numerator 1 - beta2^0 vanishes, so the rate is exactly 0.
  const double td = static_cast<double>(t);
  return beta2 * (1.0 - std::pow(beta2, td - 1.0)) / (1.0 - std::pow(beta2, td));
}

double DecaySchedule::weight_of_past(std::int64_t i, std::int64_t t) const {
  check_step(i);
  if (t < i) throw std::invalid_argument("weight_of_past: need i <= t");
  double w = 1.0 - at(i);
  for (std::int64_t j = i + 1; j <= t; ++j) w *= at(j);
  return w;
}

double relative_step_size(double rho_t, double param_scale, double eps2) {
  return std::max(eps2, param_scale) * rho_t;
}

}  // namespace factopt
