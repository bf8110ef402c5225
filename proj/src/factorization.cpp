#include "factopt/factorization.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "factopt/kernels.hpp"
#include "factopt/rng.hpp"

namespace factopt {

namespace {

void check_nonnegative(const DenseMatrix& v, const char* what) {
  for (double x : v.flat())
    if (x < 0.0) throw std::domain_error(std::string(what) + ": negative entry");
}

}  // namespace

double i_divergence(double p, double q) {
  if (p < 0.0 || q < 0.0) throw std::domain_error("i_divergence: negative input");
  if (p == 0.0) return q;
  if (q == 0.0) return std::numeric_limits<double>::infinity();
  return p * std::log(p / q) - p + q;
}

double total_divergence(const DenseMatrix& v, const RankOneFactors& f) {
  if (f.row.size() != v.rows() || f.col.size() != v.cols())
    throw std::invalid_argument("total_divergence: factor sizes do not match matrix");
  double acc = 0.0;
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j)
      acc += i_divergence(v(i, j), f.row[i] * f.col[j]);
  return acc;
}

RankOneFactors project_rank_one(const DenseMatrix& v) {
  check_nonnegative(v, "project_rank_one");
  RankOneFactors f{row_sums(v), col_sums(v)};
  const double total = kernels::sum(f.row.flat());
  if (total == 0.0) return f;  // zero matrix: zero factors, zero product
  kernels::scale(f.col.flat(), 1.0 / total);
  return f;
}

RankOneFactors alternating_rank_one(const DenseMatrix& v, int restarts,
                                    int iters, std::uint64_t seed) {
  check_nonnegative(v, "alternating_rank_one");
  const DenseVector rs = row_sums(v);
  const DenseVector cs = col_sums(v);
  const double total = kernels::sum(rs.flat());
  if (total == 0.0) return {DenseVector(v.rows()), DenseVector(v.cols())};

  RankOneFactors best{DenseVector(v.rows()), DenseVector(v.cols())};
  double best_div = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int r = 0; r < restarts; ++r) {
    RankOneFactors f{DenseVector(v.rows()), DenseVector(v.cols())};
    for (std::size_t i = 0; i < f.row.size(); ++i) f.row[i] = 0.5 + rng.next_double();
    for (std::size_t j = 0; j < f.col.size(); ++j) f.col[j] = 0.5 + rng.next_double();

    double prev = total_divergence(v, f);
    for (int it = 0; it < iters; ++it) {
      // Stationarity updates: each factor becomes the matching marginal
      // divided by the sum of the other factor.
      const double col_total = kernels::sum(f.col.flat());
      for (std::size_t i = 0; i < f.row.size(); ++i) f.row[i] = rs[i] / col_total;
      const double row_total = kernels::sum(f.row.flat());
      for (std::size_t j = 0; j < f.col.size(); ++j) f.col[j] = cs[j] / row_total;

      const double cur = total_divergence(v, f);
      const bool converged = std::isfinite(cur) && std::abs(prev - cur) < 1e-13;
      prev = cur;
      if (converged) break;
    }
    if (prev < best_div) {
      best_div = prev;
      best = f;
    }
  }
  return best;
}

}  // namespace factopt
