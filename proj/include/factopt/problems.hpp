#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "factopt/optim.hpp"

// Synthetic objectives with analytic gradients, plus parameter-independent
// gradient streams. Everything is deterministic given (seed, step): batches
// and noise come from Rng::for_step, initialization from step 0.

namespace factopt {

struct Evaluation {
  double loss = 0.0;
  std::vector<TensorValue> grads;
};

class Problem {
 public:
  virtual ~Problem() = default;

  const std::string& name() const { return name_; }
  const std::vector<ParamSlot>& initial_slots() const { return slots_; }
  std::optional<double> optimum() const { return optimum_; }

  // Loss and per-slot gradients at the given parameter values, for the
  // 1-indexed training step.
  virtual Evaluation evaluate(const std::vector<ParamSlot>& slots,
                              std::int64_t step) const = 0;

  // Deterministic whole-dataset loss, used for final reporting.
  virtual double full_loss(const std::vector<ParamSlot>& slots) const;

 protected:
  Problem(std::string name, std::vector<ParamSlot> slots,
          std::optional<double> optimum = std::nullopt)
      : name_(std::move(name)), slots_(std::move(slots)), optimum_(optimum) {}

  std::string name_;
  std::vector<ParamSlot> slots_;
  std::optional<double> optimum_;
};

// f(x) = 0.5 * x'Ax with A diagonal, eigenvalues log-spaced in
// [1, condition]. Gradients get additive seeded normal noise of the given
// scale; the reported loss stays the noiseless value. x0 is seeded and
// rescaled to RMS init_rms.
std::unique_ptr<Problem> make_quadratic_bowl(std::size_t n, double condition,
                                             double noise_scale,
                                             std::uint64_t seed,
                                             double init_rms = 1.0);

// Log-loss on seeded linearly-separable data with margin 0.5. classes == 2
// trains a weight vector; classes > 2 trains a (classes x features) matrix
// under softmax cross-entropy. Weights start at zero.
std::unique_ptr<Problem> make_logistic_regression(std::size_t features,
                                                  std::size_t examples,
                                                  std::size_t batch,
                                                  std::uint64_t seed,
                                                  std::size_t classes = 2);

// Regression y = W2 tanh(W1 x + b1) against a seeded teacher network with
// additive target noise; full-batch loss and hand-derived backprop.
// input_scale rescales the (seeded) inputs and exists for edge-case tests.
std::unique_ptr<Problem> make_two_layer_net(std::size_t d_in, std::size_t d_hidden,
                                            std::size_t d_out, std::uint64_t seed,
                                            std::size_t examples = 64,
                                            double target_noise = 0.05,
                                            double input_scale = 1.0);

// Toy linear-softmax classifier over a vocabulary whose embedding slot
// follows one of three init/multiplier schemes; the raw seeded init values
// are shared across variants so their scales differ by exact factors.
enum class EmbeddingVariant { Scaled, UnitInit, SmallInit };
std::unique_ptr<Problem> make_embedding_scale(std::size_t d_model,
                                              EmbeddingVariant variant,
                                              std::uint64_t seed,
                                              std::size_t vocab = 32,
                                              std::size_t batch = 16);

// Parameter-independent gradient sources wrapped as problems (loss is 0).
class GradientStream {
 public:
  virtual ~GradientStream() = default;
  virtual TensorValue at(std::int64_t step) const = 0;
};

// Every entry equals low_mag through t_jump and high_mag afterwards.
std::unique_ptr<GradientStream> make_scale_jump_stream(std::int64_t t_jump,
                                                       double low_mag,
                                                       double high_mag,
                                                       std::size_t rows,
                                                       std::size_t cols);

std::unique_ptr<Problem> make_stream_problem(std::string name,
                                             std::shared_ptr<GradientStream> stream,
                                             std::size_t rows, std::size_t cols);

}  // namespace factopt
