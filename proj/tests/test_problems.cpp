#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "factopt/optimizer.hpp"
#include "factopt/problems.hpp"
#include "testutil.hpp"

using namespace factopt;

namespace {

std::vector<ParamSlot> perturbed(const Problem& problem, std::uint64_t seed,
                                 double scale) {
  std::vector<ParamSlot> slots = problem.initial_slots();
  Rng rng(seed);
  for (ParamSlot& slot : slots)
    for (double& v : slot.flat()) v += scale * rng.next_normal();
  return slots;
}

}  // namespace

TEST_CASE("quadratic bowl: gradients, init scale, optimum") {
  const auto quad = make_quadratic_bowl(10, 10.0, 0.0, 3, 1.0);
  CHECK(quad->name() == "quad");
  CHECK(quad->optimum() == 0.0);
  CHECK(rms(quad->initial_slots()[0].value()) == doctest::Approx(1.0).epsilon(1e-12));

  // Gradient vanishes at the minimum.
  std::vector<ParamSlot> at_zero = quad->initial_slots();
  for (double& v : at_zero[0].flat()) v = 0.0;
  const Evaluation ev = quad->evaluate(at_zero, 1);
  CHECK(ev.loss == 0.0);
  for (double g : flat(ev.grads[0])) CHECK(g == 0.0);

  for (std::uint64_t pt = 0; pt < 3; ++pt)
    CHECK(testing::gradient_check(*quad, perturbed(*quad, 100 + pt, 0.5), 1) < 1e-6);
}

TEST_CASE("quadratic bowl: seeded noise is deterministic and excluded from loss") {
  const auto quad = make_quadratic_bowl(6, 4.0, 0.3, 9, 1.0);
  const auto slots = quad->initial_slots();
  const Evaluation a = quad->evaluate(slots, 5);
  const Evaluation b = quad->evaluate(slots, 5);
  CHECK(a.loss == b.loss);
  CHECK(std::get<DenseVector>(a.grads[0]) == std::get<DenseVector>(b.grads[0]));
  const Evaluation c = quad->evaluate(slots, 6);
  CHECK(std::get<DenseVector>(a.grads[0]) != std::get<DenseVector>(c.grads[0]));
  CHECK(a.loss == c.loss);  // loss stays the noiseless value
  CHECK(a.loss == quad->full_loss(slots));
}

TEST_CASE("quadratic bowl under plain gradient descent is monotone") {
  const auto quad = make_quadratic_bowl(10, 10.0, 0.0, 11, 1.0);
  std::vector<ParamSlot> slots = quad->initial_slots();
  double prev = quad->full_loss(slots);
  for (int t = 1; t <= 200; ++t) {
    const Evaluation ev = quad->evaluate(slots, t);
    sgd_step(slots[0], ev.grads[0], 0.15);  // below 2/lambda_max = 0.2
    const double loss = quad->full_loss(slots);
    CHECK(loss <= prev + 1e-15);
    prev = loss;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("logistic regression: zero weights give the uniform loss") {
  const auto bin = make_logistic_regression(16, 128, 128, 21, 2);
  CHECK(bin->initial_slots()[0].kind() == SlotKind::Vector);
  const double loss0 = bin->evaluate(bin->initial_slots(), 1).loss;
  CHECK(loss0 == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const auto multi = make_logistic_regression(10, 64, 64, 22, 4);
  CHECK(multi->initial_slots()[0].kind() == SlotKind::Matrix);
  CHECK(multi->initial_slots()[0].rows() == 4);
  CHECK(multi->initial_slots()[0].cols() == 10);
  const double loss4 = multi->evaluate(multi->initial_slots(), 1).loss;
  CHECK(loss4 == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("logistic regression: full-batch gradients match finite differences") {
  const auto bin = make_logistic_regression(8, 32, 32, 23, 2);
  CHECK(testing::gradient_check(*bin, bin->initial_slots(), 1) < 1e-6);
  CHECK(testing::gradient_check(*bin, perturbed(*bin, 200, 0.3), 1) < 1e-6);

  const auto multi = make_logistic_regression(6, 24, 24, 24, 4);
  CHECK(testing::gradient_check(*multi, perturbed(*multi, 201, 0.3), 1) < 1e-6);
}

TEST_CASE("logistic regression: minibatches are deterministic per step") {
  const auto p = make_logistic_regression(8, 64, 8, 25, 2);
  const auto slots = perturbed(*p, 300, 0.5);
  const Evaluation a = p->evaluate(slots, 17);
  const Evaluation b = p->evaluate(slots, 17);
  CHECK(a.loss == b.loss);
  CHECK(std::get<DenseVector>(a.grads[0]) == std::get<DenseVector>(b.grads[0]));
}

TEST_CASE("two-layer net: slots and gradient checks") {
  const auto mlp = make_two_layer_net(8, 16, 4, 31);
  const auto& slots = mlp->initial_slots();
  REQUIRE(slots.size() == 3);
  CHECK(slots[0].kind() == SlotKind::Matrix);
  CHECK(slots[1].kind() == SlotKind::Vector);
  CHECK(slots[2].kind() == SlotKind::Matrix);

  for (std::uint64_t pt = 0; pt < 3; ++pt)
    CHECK(testing::gradient_check(*mlp, perturbed(*mlp, 400 + pt, 0.2), 1) < 1e-5);
}

TEST_CASE("two-layer net: zero inputs zero the first-layer weight gradient") {
  const auto mlp = make_two_layer_net(5, 7, 3, 33, 16, 0.05, /*input_scale=*/0.0);
  const Evaluation ev = mlp->evaluate(mlp->initial_slots(), 1);
  for (double g : flat(ev.grads[0])) CHECK(g == 0.0);
}

TEST_CASE("embedding problem: init scales and variants") {
  const double d = 16.0;
  const auto scaled = make_embedding_scale(16, EmbeddingVariant::Scaled, 41);
  const auto unit = make_embedding_scale(16, EmbeddingVariant::UnitInit, 41);
  const auto small = make_embedding_scale(16, EmbeddingVariant::SmallInit, 41);

  const double rms_scaled = rms(scaled->initial_slots()[0].value());
  const double rms_unit = rms(unit->initial_slots()[0].value());
  const double rms_small = rms(small->initial_slots()[0].value());
  CHECK(rms_scaled == doctest::Approx(1.0 / std::sqrt(d)).epsilon(0.1));
  CHECK(rms_unit == doctest::Approx(1.0).epsilon(0.1));

  // The raw draws are shared, so the scales differ by exact factors and the
  // relative step sizes inherit the same ratio before the eps2 floor.
  CHECK(testing::rel_diff(rms_small, rms_unit / std::sqrt(d)) < 1e-12);
  const double alpha_unit = relative_step_size(1e-2, rms_unit, 1e-3);
  const double alpha_small = relative_step_size(1e-2, rms_small, 1e-3);
  CHECK(testing::rel_diff(alpha_small, alpha_unit / std::sqrt(d)) < 1e-12);

  CHECK(testing::gradient_check(*small, small->initial_slots(), 1, 1e-5) < 1e-5);
}

TEST_CASE("scale-jump stream") {
  const auto stream = make_scale_jump_stream(2000, 1.0, 10.0, 4, 4);
  for (std::int64_t t : {1, 100, 2000}) {
    const auto g = std::get<DenseMatrix>(stream->at(t));
    for (double v : g.flat()) CHECK(v == 1.0);
  }
  for (std::int64_t t : {2001, 2500}) {
    const auto g = std::get<DenseMatrix>(stream->at(t));
    for (double v : g.flat()) CHECK(v == 10.0);
  }
  CHECK_THROWS_AS(make_scale_jump_stream(0, 1.0, 10.0, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_scale_jump_stream(5, 0.0, 10.0, 2, 2), std::invalid_argument);
}

TEST_CASE("stationary stream keeps the update diagnostic at one") {
  auto problem = make_stream_problem("flat", make_scale_jump_stream(10, 2.0, 2.0, 4, 4), 4, 4);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Adam;
  cfg.adam = {0.0, 0.9, 1e-8};
  cfg.alpha = StepSizeSchedule::absolute_flat(0.1);
  std::vector<ParamSlot> slots = problem->initial_slots();
  Optimizer opt(cfg, slots);
  for (int t = 1; t <= 500; ++t) {
    const Evaluation ev = problem->evaluate(slots, t);
    CHECK(ev.loss == 0.0);
    const auto diags = opt.step(slots, ev.grads);
    CHECK(diags[0].rms_u == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("out-of-date estimator counts after a gradient scale jump") {
  auto count_large = [](double beta2) {
    auto problem =
        make_stream_problem("jump", make_scale_jump_stream(2000, 1.0, 10.0, 4, 4), 4, 4);
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Adam;
    cfg.adam = {0.0, beta2, 1e-8};
    cfg.alpha = StepSizeSchedule::absolute_flat(0.1);
    std::vector<ParamSlot> slots = problem->initial_slots();
    Optimizer opt(cfg, slots);
    int count = 0;
    for (int t = 1; t <= 3000; ++t) {
      const Evaluation ev = problem->evaluate(slots, t);
      const auto diags = opt.step(slots, ev.grads);
      if (t > 2000 && diags[0].rms_u > 2.0) ++count;
    }
    return count;
  };
  CHECK(count_large(0.9) <= 5);
  CHECK(count_large(0.999) >= 150);
}

TEST_CASE("problems are deterministic end to end") {
  const auto a = make_embedding_scale(8, EmbeddingVariant::Scaled, 77);
  const auto b = make_embedding_scale(8, EmbeddingVariant::Scaled, 77);
  const auto slots = a->initial_slots();
  for (std::int64_t step : {1, 2, 13}) {
    const Evaluation ea = a->evaluate(slots, step);
    const Evaluation eb = b->evaluate(slots, step);
    CHECK(ea.loss == eb.loss);
    CHECK(std::get<DenseMatrix>(ea.grads[0]) == std::get<DenseMatrix>(eb.grads[0]));
    CHECK(std::get<DenseMatrix>(ea.grads[1]) == std::get<DenseMatrix>(eb.grads[1]));
  }
}

TEST_CASE("every optimizer descends on the default quadratic") {
  for (OptimizerKind kind : {OptimizerKind::Sgd, OptimizerKind::Adam,
                             OptimizerKind::AdamEquivalent, OptimizerKind::AdamFactored,
                             OptimizerKind::AdamRowMean, OptimizerKind::AdamColMean,
                             OptimizerKind::Adafactor}) {
    const auto quad = make_quadratic_bowl(10, 10.0, 0.0, 51, 1.0);
    OptimizerConfig cfg;
    cfg.kind = kind;
    if (kind == OptimizerKind::Sgd)
      cfg.alpha = StepSizeSchedule::absolute_flat(10.0);
    else
      cfg.alpha = StepSizeSchedule::absolute_flat(0.1);
    if (kind == OptimizerKind::AdamFactored || kind == OptimizerKind::AdamRowMean ||
        kind == OptimizerKind::AdamColMean)
      cfg.adam.beta1 = 0.0;
    std::vector<ParamSlot> slots = quad->initial_slots();
    Optimizer opt(cfg, slots);
    const double start = quad->full_loss(slots);
    double after_first = 0.0;
    for (int t = 1; t <= 500; ++t) {
      const Evaluation ev = quad->evaluate(slots, t);
      opt.step(slots, ev.grads);
      if (t == 1) after_first = quad->full_loss(slots);
    }
    const double final = quad->full_loss(slots);
    CHECK(after_first < start);
    CHECK(final < after_first);
    if (kind == OptimizerKind::Sgd) CHECK(final < 1e-3);
  }
}
