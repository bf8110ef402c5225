#pragma once

#include <optional>
#include <string>

#include "factopt/checkpoint.hpp"
#include "factopt/config.hpp"

namespace factopt {

struct RunOutcome {
  enum class Status { Completed, Diverged };
  Status status = Status::Completed;
  std::int64_t steps_done = 0;
  // Whole-dataset loss after the last step; at divergence, the loss that
  // triggered the stop (possibly NaN/Inf).
  double final_loss = 0.0;
  bool diverged() const { return status == Status::Diverged; }
};

struct RunOptions {
  std::string trace_path = "trace.csv";
  // Continue from a previously saved state instead of the problem's
  // initial slots.
  std::optional<CheckpointData> resume;
};

// Runs the training loop: evaluate, detect divergence, step, trace, and
// checkpoint when configured. Throws std::runtime_error on I/O failure.
RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace factopt
