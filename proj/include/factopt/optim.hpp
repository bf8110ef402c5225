#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "factopt/schedule.hpp"
#include "factopt/tensor.hpp"

namespace factopt {

enum class SlotKind { Scalar, Vector, Matrix };

// A scalar, vector or matrix value; gradients have the same shape as the
// parameter they belong to.
using TensorValue = std::variant<double, DenseVector, DenseMatrix>;

SlotKind kind_of(const TensorValue& v);
std::size_t numel(const TensorValue& v);
std::span<double> flat(TensorValue& v);
std::span<const double> flat(const TensorValue& v);
double rms(const TensorValue& v);
bool all_finite(const TensorValue& v);

// A named trainable parameter. Matrices take the factored update paths;
// vectors and scalars take the elementwise ones (a scalar behaves as a
// length-1 vector).
class ParamSlot {
 public:
  ParamSlot(std::string name, TensorValue value)
      : name_(std::move(name)), value_(std::move(value)) {}

  const std::string& name() const { return name_; }
  SlotKind kind() const { return kind_of(value_); }
  std::size_t numel() const { return factopt::numel(value_); }
  TensorValue& value() { return value_; }
  const TensorValue& value() const { return value_; }
  std::span<double> flat() { return factopt::flat(value_); }
  std::span<const double> flat() const { return factopt::flat(value_); }

  const DenseMatrix& matrix() const { return std::get<DenseMatrix>(value_); }
  DenseMatrix& matrix() { return std::get<DenseMatrix>(value_); }

  // Matrix: rows x cols. Vector: length x 1. Scalar: 1 x 1.
  std::size_t rows() const;
  std::size_t cols() const;

 private:
  std::string name_;
  TensorValue value_;
};

// Thrown when a step receives a NaN/Inf gradient. Accumulators are left
// untouched so the caller can report divergence and stop.
struct NonFiniteGradientError : std::runtime_error {
  explicit NonFiniteGradientError(const std::string& slot)
      : std::runtime_error("non-finite gradient for slot '" + slot + "'") {}
};

// ---- Optimizer state, one object per slot ----

// Full first/second moment accumulators, stored flat over the slot's
// elements. The first moment is only allocated when beta1 > 0.
struct AdamState {
  std::optional<DenseVector> m;
  DenseVector v;
  std::int64_t t = 0;
};

// Row and column accumulators for a matrix slot, plus an optional full
// first-moment matrix used when momentum is enabled.
struct FactoredState {
  DenseVector r;
  DenseVector c;
  std::optional<DenseMatrix> m;
  std::int64_t t = 0;
};

// Second-moment accumulator for vector and scalar slots.
struct VectorState {
  DenseVector vhat;
  std::optional<DenseVector> m;
  std::int64_t t = 0;
};

// Single per-row (or per-column) mean accumulator for the broadcast
// estimator variants.
struct MeanState {
  DenseVector mean;
  std::int64_t t = 0;
};

AdamState make_adam_state(const ParamSlot& slot, bool with_momentum);
FactoredState make_factored_state(const ParamSlot& slot, bool with_momentum);
VectorState make_vector_state(const ParamSlot& slot, bool with_momentum);
MeanState make_mean_state(const ParamSlot& slot, bool row_wise);

// ---- Configuration ----

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ClipConfig {
  double d = 1.0;
  bool enabled = true;
  static ClipConfig disabled() { return {0.0, false}; }
  static ClipConfig threshold(double d) { return {d, true}; }
};

struct AdafactorConfig {
  double eps1 = 1e-30;
  double eps2 = 1e-3;
  ClipConfig clip = ClipConfig::threshold(1.0);
  StepSizeSchedule rho = StepSizeSchedule::relative_flat();
  DecaySchedule decay = DecaySchedule::increasing(0.8);
  double beta1 = 0.0;
};

// Per-step observability, one record per slot.
struct StepDiagnostics {
  double rms_u = 0.0;   // root-mean-square of the unscaled update
  double rms_x = 0.0;   // parameter scale after the step
  double alpha = 0.0;   // step size applied
  bool clipped = false;
};

// ---- Step functions ----

// Moment updates with zero-initialization bias corrections, then
// x -= alpha * mhat / (sqrt(vhat) + eps).
void adam_step(ParamSlot& slot, const TensorValue& g, AdamState& st,
               double alpha, const AdamConfig& cfg,
               StepDiagnostics* diag = nullptr);

// Same trajectory expressed with per-step corrected decay rates applied to
// the bias-corrected accumulators directly; no division by (1 - beta^t).
void adam_equivalent_step(ParamSlot& slot, const TensorValue& g, AdamState& st,
                          double alpha, const AdamConfig& cfg,
                          StepDiagnostics* diag = nullptr);

// Second moments of a matrix slot kept only as row/column sums of the
// squared-gradient average; the per-entry estimate is their outer product
// over the total. No momentum.
void factored_adam_step(ParamSlot& slot, const DenseMatrix& g, FactoredState& st,
                        double alpha, double beta2, double eps,
                        StepDiagnostics* diag = nullptr);

enum class MeanVariant { RowMean, ColMean };

// Estimator ablation: the per-entry second moment is the averaged row mean
// (broadcast across each row) or column mean (broadcast down each column).
void mean_estimator_step(MeanVariant variant, ParamSlot& slot,
                         const DenseMatrix& g, MeanState& st, double alpha,
                         double beta2, double eps,
                         StepDiagnostics* diag = nullptr);

// sqrt(mean(g^2 / vhat)) over one slot, the tracking diagnostic for the
// second-moment estimator; entries with g = 0 and vhat = 0 contribute 0.
double unscaled_update_rms(const TensorValue& g, const TensorValue& vhat);

// Rescales u in place so its RMS never exceeds cfg.d; inputs already within
// the threshold are returned untouched. Returns whether clipping engaged.
bool clip_update(std::span<double> u, const ClipConfig& cfg);

void adafactor_matrix_step(ParamSlot& slot, const DenseMatrix& g,
                           FactoredState& st, const AdafactorConfig& cfg,
                           StepDiagnostics* diag = nullptr);

void adafactor_vector_step(ParamSlot& slot, const TensorValue& g,
                           VectorState& st, const AdafactorConfig& cfg,
                           StepDiagnostics* diag = nullptr);

// x -= lr * g
void sgd_step(ParamSlot& slot, const TensorValue& g, double lr,
              StepDiagnostics* diag = nullptr);

// ---- Memory accounting ----

enum class OptimizerKind {
  Sgd,
  Adam,
  AdamEquivalent,
  AdamFactored,
  AdamRowMean,
  AdamColMean,
  Adafactor,
};

std::string to_string(OptimizerKind kind);

struct MemoryReport {
  struct Slot {
    std::string name;
    SlotKind kind;
    std::size_t param_count;
    std::size_t aux_count;
  };
  std::vector<Slot> slots;
  std::size_t total_params = 0;
  std::size_t total_aux = 0;
};

// Expected auxiliary-value counts per slot for a given optimizer: matrices
// cost rows+cols under the factored schemes versus rows*cols (or twice that
// with momentum) under the full ones.
MemoryReport memory_footprint(OptimizerKind kind, double beta1,
                              std::span<const ParamSlot> slots);

}  // namespace factopt
