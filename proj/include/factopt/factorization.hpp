#pragma once

#include <cstdint>

#include "factopt/tensor.hpp"

// Nonnegative rank-1 factorization under the generalized KL cost, used to
// compress squared-gradient statistics to row and column sums.

namespace factopt {

// Nonnegative rank-1 factor pair. `row` has one entry per matrix row and is
// normalized so its sum equals the total mass of the factored matrix; `col`
// then sums to 1.
struct RankOneFactors {
  DenseVector row;
  DenseVector col;
};

// Generalized KL divergence d(p, q) = p*log(p/q) - p + q for p, q >= 0,
// with 0*log(0) = 0, 0/0 = 0 and p/0 = +inf for p > 0.
// Negative inputs throw std::domain_error.
double i_divergence(double p, double q);

// Sum of i_divergence(v_ij, row_i * col_j) over all entries. May be +inf.
double total_divergence(const DenseMatrix& v, const RankOneFactors& f);

// Closed-form global minimizer of total_divergence over nonnegative rank-1
// factors: row sums paired with column sums divided by the total. An all-zero
// input yields zero factors. Negative entries throw std::domain_error.
RankOneFactors project_rank_one(const DenseMatrix& v);

// Alternating-minimization solver for the same problem, run from `restarts`
// random positive initializations. Exists to certify project_rank_one in
// tests; not used by the optimizers.
RankOneFactors alternating_rank_one(const DenseMatrix& v, int restarts,
                                    int iters, std::uint64_t seed);

}  // namespace factopt
