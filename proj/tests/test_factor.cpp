#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "factopt/factorization.hpp"
#include "testutil.hpp"

using namespace factopt;

namespace {

DenseMatrix random_nonneg(Rng& rng, std::size_t rows, std::size_t cols) {
  return testing::random_matrix(rng, rows, cols, 0.0, 2.0);
}

DenseMatrix outer(const DenseVector& a, const DenseVector& b) {
  DenseMatrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

}  // namespace

TEST_CASE("i_divergence basics") {
  for (double x : {0.0, 1.0, 2.5, 1e6}) CHECK(i_divergence(x, x) == 0.0);
  CHECK(i_divergence(0.0, 0.7) == 0.7);
  CHECK(i_divergence(0.0, 0.0) == 0.0);
  CHECK(i_divergence(1.0, 0.0) == std::numeric_limits<double>::infinity());
  CHECK(i_divergence(1.0, std::exp(1.0)) ==
        doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(i_divergence(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(i_divergence(1.0, -0.5), std::domain_error);
}

TEST_CASE("i_divergence is nonnegative, zero only at equality") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double p = 3.0 * rng.next_double();
    const double q = 0.01 + 3.0 * rng.next_double();
    const double d = i_divergence(p, q);
    CHECK(d >= 0.0);
    if (std::abs(p - q) > 1e-3) CHECK(d > 0.0);
  }
}

TEST_CASE("total divergence") {
  const DenseVector r = DenseVector::of({1.0, 2.0});
  const DenseVector s = DenseVector::of({0.5, 0.25});
  const DenseMatrix v = outer(r, s);
  CHECK(total_divergence(v, {r, s}) == 0.0);

  const auto eye = DenseMatrix::of(2, 2, {1, 0, 0, 1});
  CHECK(total_divergence(eye, project_rank_one(eye)) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  const auto corner = DenseMatrix::of(2, 2, {1, 0, 0, 0});
  CHECK(total_divergence(corner,
                         {DenseVector::of({1, 0}), DenseVector::of({1, 0})}) == 0.0);

  // Positive mass predicted as zero is infinitely bad, not an error.
  CHECK(total_divergence(corner,
                         {DenseVector::of({0, 1}), DenseVector::of({0, 1})}) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("closed-form projection") {
  const auto rank1 = DenseMatrix::of(2, 2, {1, 2, 2, 4});
  const RankOneFactors f = project_rank_one(rank1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(f.row[i] * f.col[j] == doctest::Approx(rank1(i, j)).epsilon(1e-12));

  const auto eye = DenseMatrix::of(2, 2, {1, 0, 0, 1});
  const RankOneFactors fe = project_rank_one(eye);
  CHECK(fe.row[0] == 1.0);
  CHECK(fe.row[1] == 1.0);
  CHECK(fe.col[0] == 0.5);
  CHECK(fe.col[1] == 0.5);

  const RankOneFactors fz = project_rank_one(DenseMatrix(2, 3));
  for (std::size_t i = 0; i < 2; ++i) CHECK(fz.row[i] == 0.0);
  for (std::size_t j = 0; j < 3; ++j) CHECK(fz.col[j] == 0.0);

  CHECK_THROWS_AS(project_rank_one(DenseMatrix::of(1, 2, {1, -0.1})),
                  std::domain_error);
}

TEST_CASE("projection normalization: row factor carries the total mass") {
  Rng rng(5);
  const DenseMatrix v = random_nonneg(rng, 5, 4);
  const RankOneFactors f = project_rank_one(v);
  CHECK(testing::rel_diff(total_sum(f.row), total_sum(v)) < 1e-12);
  CHECK(total_sum(f.col) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact recovery of rank-1 matrices") {
  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const DenseVector a = testing::random_vector(rng, 1 + k % 5, 0.0, 3.0);
    const DenseVector b = testing::random_vector(rng, 1 + (k * 3) % 6, 0.0, 3.0);
    const DenseMatrix v = outer(a, b);
    if (total_sum(v) == 0.0) continue;
    CHECK(total_divergence(v, project_rank_one(v)) <= 1e-12 * total_sum(v));
  }
}

TEST_CASE("zero rows cost nothing") {
  const auto v = DenseMatrix::of(3, 2, {0, 0, 1, 2, 2, 1});
  const RankOneFactors f = project_rank_one(v);
  CHECK(f.row[0] == 0.0);
  const double d = total_divergence(v, f);
  CHECK(std::isfinite(d));
  CHECK(d >= 0.0);
}

TEST_CASE("alternating solver certifies the closed form") {
  const auto eye = DenseMatrix::of(2, 2, {1, 0, 0, 1});
  const RankOneFactors fo = alternating_rank_one(eye, 20, 500, 99);
  CHECK(total_divergence(eye, fo) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-8));

  Rng rng(21);
  const DenseVector a = testing::random_vector(rng, 4, 0.1, 2.0);
  const DenseVector b = testing::random_vector(rng, 5, 0.1, 2.0);
  const DenseMatrix v = outer(a, b);
  const RankOneFactors fr = alternating_rank_one(v, 20, 500, 100);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j)
      CHECK(fr.row[i] * fr.col[j] == doctest::Approx(v(i, j)).epsilon(1e-10));

  for (int k = 0; k < 50; ++k) {
    Rng mk(1000 + k);
    const std::size_t rows = 1 + mk.next_index(6);
    const std::size_t cols = 1 + mk.next_index(7);
    const DenseMatrix m = random_nonneg(mk, rows, cols);
    if (total_sum(m) == 0.0) continue;
    const double closed = total_divergence(m, project_rank_one(m));
    const double iterated = total_divergence(m, alternating_rank_one(m, 20, 500, k));
    CHECK(closed <= iterated + 1e-8);
    CHECK(iterated >= closed - 1e-8);
  }
}

TEST_CASE("running averages commute with marginal sums") {
  Rng rng(31);
  const std::size_t rows = 8, cols = 6;
  const double beta = 0.9;
  DenseMatrix avg(rows, cols);
  DenseVector row_avg(rows), col_avg(cols);
  for (int t = 0; t < 120; ++t) {
    const DenseMatrix g = random_nonneg(rng, rows, cols);
    ema_update(avg, g, beta);
    ema_update(row_avg, row_sums(g), beta);
    ema_update(col_avg, col_sums(g), beta);
    const DenseVector r = row_sums(avg);
    const DenseVector c = col_sums(avg);
    for (std::size_t i = 0; i < rows; ++i)
      CHECK(testing::rel_diff(r[i], row_avg[i]) < 1e-12);
    for (std::size_t j = 0; j < cols; ++j)
      CHECK(testing::rel_diff(c[j], col_avg[j]) < 1e-12);
  }
}

TEST_CASE("factor scale symmetry leaves the cost unchanged") {
  Rng rng(41);
  const DenseMatrix v = random_nonneg(rng, 4, 6);
  const RankOneFactors f = project_rank_one(v);
  const double base = total_divergence(v, f);
  for (double alpha : {0.5, 2.0, 7.0}) {
    RankOneFactors g{f.row, f.col};
    for (std::size_t i = 0; i < g.row.size(); ++i) g.row[i] *= alpha;
    for (std::size_t j = 0; j < g.col.size(); ++j) g.col[j] /= alpha;
    CHECK(testing::rel_diff(total_divergence(v, g), base) < 1e-12);
  }
}

TEST_CASE("projection outputs stay nonnegative") {
  for (int k = 0; k < 25; ++k) {
    Rng rng(500 + k);
    const DenseMatrix v = random_nonneg(rng, 1 + rng.next_index(6), 1 + rng.next_index(6));
    const RankOneFactors f = project_rank_one(v);
    for (std::size_t i = 0; i < f.row.size(); ++i) CHECK(f.row[i] >= 0.0);
    for (std::size_t j = 0; j < f.col.size(); ++j) CHECK(f.col[j] >= 0.0);
  }
}
