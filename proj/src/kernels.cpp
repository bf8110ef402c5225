#include "factopt/kernels.hpp"

#include <atomic>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace factopt::kernels {

namespace {

std::atomic<bool> g_parallel{true};

inline bool go_parallel(std::size_t n) {
  return g_parallel.load(std::memory_order_relaxed) && n >= parallel_grain;
}

inline double sum_range(const double* p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += p[i];
  return acc;
}

inline double sumsq_range(const double* p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += p[i] * p[i];
  return acc;
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= chunk_size) return sum_range(x.data(), n);
  const std::int64_t nchunks =
      static_cast<std::int64_t>((n + chunk_size - 1) / chunk_size);
  std::vector<double> partial(static_cast<std::size_t>(nchunks));
#pragma omp parallel for if (go_parallel(n))
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * chunk_size;
    const std::size_t len = std::min(chunk_size, n - begin);
    partial[static_cast<std::size_t>(c)] = sum_range(x.data() + begin, len);
  }
  return sum_range(partial.data(), partial.size());
}

double sum_squares(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n <= chunk_size) return sumsq_range(x.data(), n);
  const std::int64_t nchunks =
      static_cast<std::int64_t>((n + chunk_size - 1) / chunk_size);
  std::vector<double> partial(static_cast<std::size_t>(nchunks));
#pragma omp parallel for if (go_parallel(n))
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * chunk_size;
    const std::size_t len = std::min(chunk_size, n - begin);
    partial[static_cast<std::size_t>(c)] = sumsq_range(x.data() + begin, len);
  }
  return sum_range(partial.data(), partial.size());
}

double rms(std::span<const double> x) {
  return std::sqrt(sum_squares(x) / static_cast<double>(x.size()));
}

bool all_finite(std::span<const double> x) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  bool ok = true;
#pragma omp parallel for reduction(&& : ok) if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) ok = ok && std::isfinite(x[i]);
  return ok;
}

void row_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out) {
  const std::int64_t r = static_cast<std::int64_t>(rows);
#pragma omp parallel for if (go_parallel(rows * cols))
  for (std::int64_t i = 0; i < r; ++i)
    out[static_cast<std::size_t>(i)] =
        sum_range(a.data() + static_cast<std::size_t>(i) * cols, cols);
}

void col_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out) {
  // Each thread owns a contiguous column range; every column is accumulated
  // top to bottom, matching the serial order exactly.
#pragma omp parallel if (go_parallel(rows * cols))
  {
#ifdef _OPENMP
    const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t id = static_cast<std::size_t>(omp_get_thread_num());
#else
    const std::size_t nt = 1, id = 0;
#endif
    const std::size_t j0 = cols * id / nt;
    const std::size_t j1 = cols * (id + 1) / nt;
    for (std::size_t j = j0; j < j1; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = a.data() + i * cols;
      for (std::size_t j = j0; j < j1; ++j) out[j] += row[j];
    }
  }
}

void square(std::span<const double> x, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) out[i] = x[i] * x[i];
}

void sqrt_elems(std::span<const double> x, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) out[i] = std::sqrt(x[i]);
}

void divide(std::span<const double> num, std::span<const double> den,
            std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(num.size());
#pragma omp parallel for if (go_parallel(num.size()))
  for (std::int64_t i = 0; i < n; ++i) out[i] = num[i] / den[i];
}

void div_by_sqrt(std::span<const double> num, std::span<const double> den,
                 std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(num.size());
#pragma omp parallel for if (go_parallel(num.size()))
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = (num[i] == 0.0 && den[i] == 0.0) ? 0.0 : num[i] / std::sqrt(den[i]);
}

void scale(std::span<double> x, double s) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) x[i] *= s;
}

void add_scalar(std::span<double> x, double c) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) x[i] += c;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void ema_update(std::span<double> acc, std::span<const double> x, double beta) {
  const double w = 1.0 - beta;
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (go_parallel(x.size()))
  for (std::int64_t i = 0; i < n; ++i) acc[i] = beta * acc[i] + w * x[i];
}

void outer_scaled(std::span<const double> r, std::span<const double> c,
                  double s, std::span<double> out) {
  const std::int64_t rows = static_cast<std::int64_t>(r.size());
  const std::size_t cols = c.size();
#pragma omp parallel for if (go_parallel(r.size() * c.size()))
  for (std::int64_t i = 0; i < rows; ++i) {
    double* row = out.data() + static_cast<std::size_t>(i) * cols;
    const double ri = r[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < cols; ++j) row[j] = ri * c[j] * s;
  }
}

namespace serial {

double sum(std::span<const double> x) { return sum_range(x.data(), x.size()); }

double sum_squares(std::span<const double> x) {
  return sumsq_range(x.data(), x.size());
}

double rms(std::span<const double> x) {
  return std::sqrt(sum_squares(x) / static_cast<double>(x.size()));
}

void row_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i)
    out[i] = sum_range(a.data() + i * cols, cols);
}

void col_sums(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<double> out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = a.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

void square(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
}

void sqrt_elems(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::sqrt(x[i]);
}

void divide(std::span<const double> num, std::span<const double> den,
            std::span<double> out) {
  for (std::size_t i = 0; i < num.size(); ++i) out[i] = num[i] / den[i];
}

void div_by_sqrt(std::span<const double> num, std::span<const double> den,
                 std::span<double> out) {
  for (std::size_t i = 0; i < num.size(); ++i)
    out[i] = (num[i] == 0.0 && den[i] == 0.0) ? 0.0 : num[i] / std::sqrt(den[i]);
}

void scale(std::span<double> x, double s) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s;
}

void add_scalar(std::span<double> x, double c) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += c;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void ema_update(std::span<double> acc, std::span<const double> x, double beta) {
  const double w = 1.0 - beta;
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] = beta * acc[i] + w * x[i];
}

void outer_scaled(std::span<const double> r, std::span<const double> c,
                  double s, std::span<double> out) {
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out[i * c.size() + j] = r[i] * c[j] * s;
}

}  // namespace serial

}  // namespace factopt::kernels
