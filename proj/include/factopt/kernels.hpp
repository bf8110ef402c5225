#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Low-level array kernels. Every entry point here is deterministic: results
// depend only on the input values and sizes, never on the thread count.
// Scalar reductions accumulate fixed-size chunks (sequential within a chunk,
// chunk partials combined in index order); row/column reductions accumulate
// each output element in a fixed sequential order.
//
// kernels::serial holds plain left-to-right loops kept as a reference for
// tests and for the benchmark target.

namespace factopt::kernels {

inline constexpr std::size_t chunk_size = 4096;

// Minimum number of elements before a loop goes parallel.
inline constexpr std::size_t parallel_grain = 32768;

bool parallel_enabled();
void set_parallel_enabled(bool on);

double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
double rms(std::span<const double> x);
bool all_finite(std::span<const double> x);

void row_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out);
void col_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out);

void square(std::span<const double> x, std::span<double> out);
void sqrt_elems(std::span<const double> x, std::span<double> out);
void divide(std::span<const double> num, std::span<const double> den,
            std::span<double> out);
// out = num / sqrt(den), with 0/sqrt(0) defined as 0.
void div_by_sqrt(std::span<const double> num, std::span<const double> den,
                 std::span<double> out);
void scale(std::span<double> x, double s);
void add_scalar(std::span<double> x, double c);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
// acc = beta * acc + (1 - beta) * x
void ema_update(std::span<double> acc, std::span<const double> x, double beta);
// out[i*cols + j] = r[i] * c[j] * s
void outer_scaled(std::span<const double> r, std::span<const double> c,
                  double s, std::span<double> out);

namespace serial {

double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
double rms(std::span<const double> x);
void row_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out);
void col_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out);
void square(std::span<const double> x, std::span<double> out);
void sqrt_elems(std::span<const double> x, std::span<double> out);
void divide(std::span<const double> num, std::span<const double> den,
            std::span<double> out);
void div_by_sqrt(std::span<const double> num, std::span<const double> den,
                 std::span<double> out);
void scale(std::span<double> x, double s);
void add_scalar(std::span<double> x, double c);
void axpy(double a, std::span<const double> x, std::span<double> y);
void ema_update(std::span<double> acc, std::span<const double> x, double beta);
void outer_scaled(std::span<const double> r, std::span<const double> c,
                  double s, std::span<double> out);

}  // namespace serial

}  // namespace factopt::kernels
