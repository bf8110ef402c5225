#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "factopt/schedule.hpp"
#include "factopt/rng.hpp"
#include "testutil.hpp"

using namespace factopt;

TEST_CASE("warmup and flat step sizes") {
  const auto warm = StepSizeSchedule::absolute_warmup(0.1);
  CHECK(warm.at(100) == doctest::Approx(1e-5).epsilon(1e-12));
  // Before the crossover the ramp wins, after it the decay does.
  CHECK(warm.at(10) == doctest::Approx(0.1 * 1e-5).epsilon(1e-12));
  CHECK(warm.at(4000000) == doctest::Approx(0.1 / 2000.0).epsilon(1e-12));

  const auto flat = StepSizeSchedule::relative_flat();
  CHECK(flat.at(1) == 0.01);
  CHECK(flat.at(1000000) == doctest::Approx(1e-3).epsilon(1e-15));

  CHECK(StepSizeSchedule::constant(0.25).at(1) == 0.25);
  CHECK(StepSizeSchedule::constant(0.25).at(999) == 0.25);

  CHECK_THROWS_AS(flat.at(0), std::invalid_argument);
  CHECK_THROWS_AS(flat.at(-3), std::invalid_argument);
}

TEST_CASE("step sizes stay positive and eventually non-increasing") {
  for (const auto& sched : {StepSizeSchedule::absolute_warmup(0.1),
                            StepSizeSchedule::absolute_flat(0.1),
                            StepSizeSchedule::relative_flat()}) {
    double prev = 0.0;
    for (std::int64_t t = 1; t <= 20000; t += 7) {
      const double v = sched.at(t);
      CHECK(v > 0.0);
      if (t > 2000000) CHECK(v <= prev);  // past any warmup crossover
      prev = v;
    }
  }
}

TEST_CASE("decay rates") {
  CHECK(DecaySchedule::increasing(0.8).at(1) == 0.0);
  CHECK(DecaySchedule::increasing(1.0).at(4) == 0.75);
  CHECK(DecaySchedule::bias_corrected(0.999).at(1) == 0.0);
  const double expect = 0.999 * (1.0 - 0.999) / (1.0 - 0.999 * 0.999);
  CHECK(DecaySchedule::bias_corrected(0.999).at(2) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(DecaySchedule::bias_corrected(0.999).at(2) ==
        doctest::Approx(0.4997499).epsilon(1e-6));

  CHECK_THROWS_AS(DecaySchedule::increasing(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DecaySchedule::increasing(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(DecaySchedule::bias_corrected(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DecaySchedule::bias_corrected(1.0), std::invalid_argument);
  CHECK_THROWS_AS(DecaySchedule::bias_corrected(1.5), std::invalid_argument);
}

TEST_CASE("decay rates are nondecreasing and below one") {
  for (const auto& sched : {DecaySchedule::increasing(0.8), DecaySchedule::increasing(1.5),
                            DecaySchedule::bias_corrected(0.9),
                            DecaySchedule::bias_corrected(0.999)}) {
    double prev = -1.0;
    for (std::int64_t t = 1; t <= 10000; ++t) {
      const double b = sched.at(t);
      CHECK(b >= prev - 1e-15);  // nondecreasing up to rounding at the plateau
      CHECK(b >= 0.0);
      CHECK(b < 1.0);
      prev = b;
    }
  }
}

TEST_CASE("past-gradient weights sum to one") {
  for (const auto& sched : {DecaySchedule::increasing(0.8), DecaySchedule::increasing(1.0),
                            DecaySchedule::increasing(1.5),
                            DecaySchedule::bias_corrected(0.9),
                            DecaySchedule::bias_corrected(0.999)}) {
    for (std::int64_t t : {1, 2, 7, 100, 1000}) {
      double sum = 0.0;
      for (std::int64_t i = 1; i <= t; ++i) sum += sched.weight_of_past(i, t);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("c = 1 reduces to the arithmetic moving average") {
  const auto sched = DecaySchedule::increasing(1.0);
  for (std::int64_t t : {1, 2, 7, 100, 1000}) {
    for (std::int64_t i = 1; i <= t; ++i) {
      const double w = sched.weight_of_past(i, t);
      CHECK(testing::rel_diff(w, 1.0 / static_cast<double>(t)) < 1e-13);
    }
  }
}

TEST_CASE("old gradients are forgotten exactly when c <= 1") {
  const auto c05 = DecaySchedule::increasing(0.5);
  CHECK(c05.weight_of_past(1, 10000) < c05.weight_of_past(1, 100));

  const auto c08 = DecaySchedule::increasing(0.8);
  CHECK(c08.weight_of_past(1, 10000) < 0.01 * c08.weight_of_past(1, 10));

  const auto c15 = DecaySchedule::increasing(1.5);
  CHECK(c15.weight_of_past(1, 10000) > 0.1 * c15.weight_of_past(1, 10));
}

TEST_CASE("bias-corrected decay replays the corrected plain average") {
  const double beta2 = 0.999;
  const auto sched = DecaySchedule::bias_corrected(beta2);
  Rng rng(77);
  double v_plain = 0.0, v_scheduled = 0.0;
  for (std::int64_t t = 1; t <= 1000; ++t) {
    const double gsq = rng.next_double() * 2.0 + 0.1;
    v_plain = beta2 * v_plain + (1.0 - beta2) * gsq;
    const double bhat = sched.at(t);
    v_scheduled = bhat * v_scheduled + (1.0 - bhat) * gsq;
    const double corrected = v_plain / (1.0 - std::pow(beta2, static_cast<double>(t)));
    CHECK(testing::rel_diff(corrected, v_scheduled) < 1e-12);
  }
}

TEST_CASE("relative step size") {
  CHECK(relative_step_size(1e-2, 0.05, 1e-3) == doctest::Approx(5e-4).epsilon(1e-15));
  CHECK(relative_step_size(1e-2, 0.0, 1e-3) == doctest::Approx(1e-5).epsilon(1e-15));
  CHECK(relative_step_size(1e-2, 1e-3, 1e-3) == relative_step_size(1e-2, 1e-3, 1e-3));
  CHECK(relative_step_size(1e-2, 1e-3, 1e-3) == doctest::Approx(1e-5).epsilon(1e-15));
}
