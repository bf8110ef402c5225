#pragma once

#include <cstdint>

// Step-size and decay-rate schedules as pure functions of the 1-indexed step
// counter. The optimizer owns the counter; schedules hold no state, so a
// restored run replays them exactly.

namespace factopt {

enum class StepSizeKind {
  AbsoluteWarmup,   // scale * min(warmup_slope * t, 1/sqrt(t))
  AbsoluteFlat,     // scale * min(cap, 1/sqrt(t))
  RelativeWarmup,   // same formulas, but consumed as a relative step rho_t
  RelativeFlat,
  ConstantMultiple, // scale, for every t
};

struct StepSizeSchedule {
  StepSizeKind kind = StepSizeKind::RelativeFlat;
  double scale = 1.0;
  double warmup_slope = 1e-6;
  double cap = 1e-2;

  static StepSizeSchedule absolute_warmup(double scale);
  static StepSizeSchedule absolute_flat(double scale);
  static StepSizeSchedule relative_warmup();
  static StepSizeSchedule relative_flat();
  static StepSizeSchedule constant(double scale);

  // Emitted step size at step t >= 1; positive for all valid configurations.
  double at(std::int64_t t) const;

  bool is_relative() const {
    return kind == StepSizeKind::RelativeWarmup || kind == StepSizeKind::RelativeFlat;
  }
};

enum class DecayKind {
  ConstantBiasCorrected,  // beta2 * (1 - beta2^(t-1)) / (1 - beta2^t)
  Increasing,             // 1 - t^(-c)
};

struct DecaySchedule {
  DecayKind kind = DecayKind::Increasing;
  double beta2 = 0.999;
  double c = 0.8;

  // Throws std::invalid_argument unless beta2 is in (0, 1).
  static DecaySchedule bias_corrected(double beta2);
  // Throws std::invalid_argument unless c > 0.
  static DecaySchedule increasing(double c);

  // Effective decay rate at step t >= 1. Zero at t = 1, nondecreasing, < 1.
  double at(std::int64_t t) const;

  // Weight of the i-th squared gradient inside the accumulator at step t:
  // (1 - rate(i)) * prod_{j=i+1..t} rate(j). The weights over i = 1..t sum
  // to 1 for any schedule whose rate at t = 1 is zero.
  double weight_of_past(std::int64_t i, std::int64_t t) const;

  void validate() const;
};

// max(eps2, param_scale) * rho_t: step sizes proportional to the parameter's
// own scale, floored so zero-initialized parameters can move.
double relative_step_size(double rho_t, double param_scale, double eps2);

}  // namespace factopt
