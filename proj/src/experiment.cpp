#include "factopt/experiment.hpp"

#include <cmath>

#include "factopt/trace.hpp"

namespace factopt {

namespace {

bool finite_gradients(const std::vector<TensorValue>& grads) {
  for (const TensorValue& g : grads)
    if (!all_finite(g)) return false;
  return true;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto problem = cfg.instantiate_problem();

  std::vector<ParamSlot> slots;
  std::int64_t start = 0;
  if (opts.resume) {
    slots = opts.resume->slots;
    start = opts.resume->step;
  } else {
    slots = problem->initial_slots();
  }

  Optimizer optimizer(cfg.optimizer, slots);
  if (opts.resume) optimizer.restore(opts.resume->step, opts.resume->states);

  TraceWriter trace(opts.trace_path);
  const std::int64_t checkpoint_at =
      cfg.checkpoint_at > 0 ? cfg.checkpoint_at : cfg.steps;

  RunOutcome outcome;
  for (std::int64_t t = start + 1; t <= cfg.steps; ++t) {
    Evaluation ev = problem->evaluate(slots, t);
    const bool bad = !std::isfinite(ev.loss) || !finite_gradients(ev.grads);
    if (bad) {
      for (const ParamSlot& slot : slots) {
        StepDiagnostics d;
        d.rms_x = all_finite(slot.value()) ? rms(slot.value()) : 0.0;
        trace.record(t, ev.loss, slot.name(), d, true);
      }
      outcome.status = RunOutcome::Status::Diverged;
      outcome.steps_done = t;
      outcome.final_loss = ev.loss;
      return outcome;
    }

    const std::vector<StepDiagnostics> diags = optimizer.step(slots, ev.grads);
    if (t % cfg.trace_every == 0)
      for (std::size_t i = 0; i < slots.size(); ++i)
        trace.record(t, ev.loss, slots[i].name(), diags[i], false);

    if (cfg.checkpoint_path && t == checkpoint_at)
      save_checkpoint(*cfg.checkpoint_path, cfg.config_hash(), cfg.canonical_text(),
                      t, slots, optimizer.states());
  }

  outcome.status = RunOutcome::Status::Completed;
  outcome.steps_done = cfg.steps;
  outcome.final_loss = problem->full_loss(slots);
  return outcome;
}

}  // namespace factopt
