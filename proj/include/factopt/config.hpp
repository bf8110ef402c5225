#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "factopt/optimizer.hpp"
#include "factopt/problems.hpp"

// Experiment configuration: one `key=value` per line, keys grouped by dotted
// prefix (problem.*, optim.*, schedule.*, decay.*, run.*). Blank lines and
// lines starting with '#' are ignored. Unknown keys, keys that do not apply
// to the chosen problem or optimizer, and out-of-range values are all
// reported together.

namespace factopt {

struct QuadParams {
  std::size_t n = 10;
  double cond = 10.0;
  double noise = 0.0;
  double init_rms = 1.0;
};

struct LogregParams {
  std::size_t features = 16;
  std::size_t examples = 128;
  std::size_t batch = 32;
  std::size_t classes = 2;
};

struct MlpParams {
  std::size_t d_in = 8;
  std::size_t d_hidden = 16;
  std::size_t d_out = 4;
  std::size_t examples = 64;
  double target_noise = 0.05;
};

struct EmbedParams {
  std::size_t d_model = 16;
  std::size_t vocab = 32;
  std::size_t batch = 16;
  EmbeddingVariant variant = EmbeddingVariant::Scaled;
};

struct StreamJumpParams {
  std::int64_t t_jump = 2000;
  double low = 1.0;
  double high = 10.0;
  std::size_t rows = 16;
  std::size_t cols = 16;
};

using ProblemParams =
    std::variant<QuadParams, LogregParams, MlpParams, EmbedParams, StreamJumpParams>;

struct ExperimentConfig {
  std::string problem_name;
  ProblemParams problem;
  OptimizerConfig optimizer;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::int64_t trace_every = 1;
  std::optional<std::string> checkpoint_path;
  std::int64_t checkpoint_at = 0;  // 0 means "after the final step"

  // Fully-expanded `key=value` form with defaults materialized; parsing it
  // reproduces this config. Checkpoints embed this text.
  std::string canonical_text() const;
  // FNV-1a hash of canonical_text().
  std::uint64_t config_hash() const;

  std::unique_ptr<Problem> instantiate_problem() const;
};

struct ConfigParse {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

ConfigParse parse_config(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace factopt
