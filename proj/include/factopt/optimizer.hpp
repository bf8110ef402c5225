#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "factopt/optim.hpp"

// Runtime wrapper that owns one state object per parameter slot and applies
// the configured algorithm each step. Slots never share statistics, so
// distinct slots could be stepped concurrently; the wrapper itself steps
// them in order for reproducible traces.

namespace factopt {

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adafactor;
  AdamConfig adam;            // adam / adam-equiv / fallback paths
  AdafactorConfig adafactor;  // adafactor only
  // Absolute step-size schedule for sgd and the adam family. Adafactor's
  // relative schedule lives in adafactor.rho.
  StepSizeSchedule alpha = StepSizeSchedule::absolute_flat(0.1);

  // Throws std::invalid_argument on inconsistent combinations.
  void validate(std::span<const ParamSlot> slots) const;
};

using SlotState =
    std::variant<std::monostate, AdamState, FactoredState, VectorState, MeanState>;

class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::span<const ParamSlot> slots);

  // Applies one step; grads must match the slots one-to-one.
  std::vector<StepDiagnostics> step(std::vector<ParamSlot>& slots,
                                    std::span<const TensorValue> grads);

  std::int64_t step_count() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

  std::span<const SlotState> states() const { return states_; }
  // Restores states (and the step counter) captured by a checkpoint.
  void restore(std::int64_t t, std::vector<SlotState> states);

  // Auxiliary values actually allocated, for cross-checking the
  // memory_footprint formulas.
  MemoryReport allocated_memory(std::span<const ParamSlot> slots) const;

 private:
  OptimizerConfig cfg_;
  std::vector<SlotState> states_;
  std::int64_t t_ = 0;
};

}  // namespace factopt
