#include "factopt/optimizer.hpp"

#include <stdexcept>

namespace factopt {

void OptimizerConfig::validate(std::span<const ParamSlot> slots) const {
  (void)slots;
  const bool adam_family = kind == OptimizerKind::Adam ||
                           kind == OptimizerKind::AdamEquivalent ||
                           kind == OptimizerKind::AdamFactored ||
                           kind == OptimizerKind::AdamRowMean ||
                           kind == OptimizerKind::AdamColMean;
  if (adam_family || kind == OptimizerKind::Sgd) {
    if (alpha.is_relative())
      throw std::invalid_argument(to_string(kind) +
                                  " uses absolute step sizes; pick an absolute or "
                                  "constant schedule");
  } else if (!adafactor.rho.is_relative() &&
             adafactor.rho.kind != StepSizeKind::ConstantMultiple) {
    throw std::invalid_argument(
        "adafactor uses relative step sizes; pick a relative or constant schedule");
  }
  if (adam_family && !(adam.beta1 >= 0.0 && adam.beta1 < 1.0))
    throw std::invalid_argument("beta1 must lie in [0, 1)");
  if (adam_family && !(adam.beta2 > 0.0 && adam.beta2 < 1.0))
    throw std::invalid_argument("beta2 must lie in (0, 1)");
  const bool second_moment_only = kind == OptimizerKind::AdamFactored ||
                                  kind == OptimizerKind::AdamRowMean ||
                                  kind == OptimizerKind::AdamColMean;
  if (second_moment_only && adam.beta1 != 0.0)
    throw std::invalid_argument(to_string(kind) + " does not support momentum");
  if (kind == OptimizerKind::Adafactor) {
    if (!(adafactor.beta1 >= 0.0 && adafactor.beta1 < 1.0))
      throw std::invalid_argument("beta1 must lie in [0, 1)");
    if (!(adafactor.eps1 >= 0.0) || !(adafactor.eps2 > 0.0))
      throw std::invalid_argument("eps1 must be >= 0 and eps2 > 0");
    if (adafactor.clip.enabled && !(adafactor.clip.d > 0.0))
      throw std::invalid_argument("clip threshold d must be positive");
    adafactor.decay.validate();
  }
}

Optimizer::Optimizer(OptimizerConfig cfg, std::span<const ParamSlot> slots)
    : cfg_(std::move(cfg)) {
  cfg_.validate(slots);
  states_.reserve(slots.size());
  for (const ParamSlot& slot : slots) {
    const bool matrix = slot.kind() == SlotKind::Matrix;
    switch (cfg_.kind) {
      case OptimizerKind::Sgd:
        states_.emplace_back(std::monostate{});
        break;
      case OptimizerKind::Adam:
      case OptimizerKind::AdamEquivalent:
        states_.emplace_back(make_adam_state(slot, cfg_.adam.beta1 > 0.0));
        break;
      case OptimizerKind::AdamFactored:
        if (matrix)
          states_.emplace_back(make_factored_state(slot, false));
        else
          states_.emplace_back(make_adam_state(slot, false));
        break;
      case OptimizerKind::AdamRowMean:
      case OptimizerKind::AdamColMean:
        if (matrix)
          states_.emplace_back(
              make_mean_state(slot, cfg_.kind == OptimizerKind::AdamRowMean));
        else
          states_.emplace_back(make_adam_state(slot, false));
        break;
      case OptimizerKind::Adafactor:
        if (matrix)
          states_.emplace_back(make_factored_state(slot, cfg_.adafactor.beta1 > 0.0));
        else
          states_.emplace_back(make_vector_state(slot, cfg_.adafactor.beta1 > 0.0));
        break;
    }
  }
}

std::vector<StepDiagnostics> Optimizer::step(std::vector<ParamSlot>& slots,
                                             std::span<const TensorValue> grads) {
  if (slots.size() != states_.size() || grads.size() != states_.size())
    throw std::invalid_argument("Optimizer::step: slot/gradient count mismatch");
  const std::int64_t t = t_ + 1;
  std::vector<StepDiagnostics> diags(slots.size());

  for (std::size_t i = 0; i < slots.size(); ++i) {
    ParamSlot& slot = slots[i];
    const TensorValue& g = grads[i];
    StepDiagnostics* diag = &diags[i];
    switch (cfg_.kind) {
      case OptimizerKind::Sgd:
        sgd_step(slot, g, cfg_.alpha.at(t), diag);
        break;
      case OptimizerKind::Adam:
        adam_step(slot, g, std::get<AdamState>(states_[i]), cfg_.alpha.at(t),
                  cfg_.adam, diag);
        break;
      case OptimizerKind::AdamEquivalent:
        adam_equivalent_step(slot, g, std::get<AdamState>(states_[i]),
                             cfg_.alpha.at(t), cfg_.adam, diag);
        break;
      case OptimizerKind::AdamFactored:
        if (slot.kind() == SlotKind::Matrix) {
          factored_adam_step(slot, std::get<DenseMatrix>(g),
                             std::get<FactoredState>(states_[i]), cfg_.alpha.at(t),
                             cfg_.adam.beta2, cfg_.adam.eps, diag);
        } else {
          AdamConfig flat_cfg = cfg_.adam;
          flat_cfg.beta1 = 0.0;
          adam_step(slot, g, std::get<AdamState>(states_[i]), cfg_.alpha.at(t),
                    flat_cfg, diag);
        }
        break;
      case OptimizerKind::AdamRowMean:
      case OptimizerKind::AdamColMean:
        if (slot.kind() == SlotKind::Matrix) {
          mean_estimator_step(cfg_.kind == OptimizerKind::AdamRowMean
                                  ? MeanVariant::RowMean
                                  : MeanVariant::ColMean,
                              slot, std::get<DenseMatrix>(g),
                              std::get<MeanState>(states_[i]), cfg_.alpha.at(t),
                              cfg_.adam.beta2, cfg_.adam.eps, diag);
        } else {
          AdamConfig flat_cfg = cfg_.adam;
          flat_cfg.beta1 = 0.0;
          adam_step(slot, g, std::get<AdamState>(states_[i]), cfg_.alpha.at(t),
                    flat_cfg, diag);
        }
        break;
      case OptimizerKind::Adafactor:
        if (slot.kind() == SlotKind::Matrix)
          adafactor_matrix_step(slot, std::get<DenseMatrix>(g),
                                std::get<FactoredState>(states_[i]),
                                cfg_.adafactor, diag);
        else
          adafactor_vector_step(slot, g, std::get<VectorState>(states_[i]),
                                cfg_.adafactor, diag);
        break;
    }
  }
  t_ = t;
  return diags;
}

void Optimizer::restore(std::int64_t t, std::vector<SlotState> states) {
  if (states.size() != states_.size())
    throw std::invalid_argument("Optimizer::restore: state count mismatch");
  states_ = std::move(states);
  t_ = t;
}

MemoryReport Optimizer::allocated_memory(std::span<const ParamSlot> slots) const {
  MemoryReport report;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    std::size_t aux = std::visit(
        [](const auto& st) -> std::size_t {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            return 0;
          } else if constexpr (std::is_same_v<T, AdamState>) {
            return st.v.size() + (st.m ? st.m->size() : 0);
          } else if constexpr (std::is_same_v<T, FactoredState>) {
            return st.r.size() + st.c.size() + (st.m ? st.m->size() : 0);
          } else if constexpr (std::is_same_v<T, VectorState>) {
            return st.vhat.size() + (st.m ? st.m->size() : 0);
          } else {
            return st.mean.size();
          }
        },
        states_[i]);
    report.slots.push_back({slots[i].name(), slots[i].kind(), slots[i].numel(), aux});
    report.total_params += slots[i].numel();
    report.total_aux += aux;
  }
  return report;
}

}  // namespace factopt
