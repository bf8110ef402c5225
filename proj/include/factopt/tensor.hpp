#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Dense row-major storage for 64-bit values, plus the handful of whole-array
// operations the optimizers need. No strides, no views, no broadcasting.

namespace factopt {

class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t len, double fill = 0.0);
  static DenseVector of(std::vector<double> values);

  std::size_t size() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> data_;
};

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static DenseMatrix of(std::size_t rows, std::size_t cols,
                        std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseVector row_sums(const DenseMatrix& a);
DenseVector col_sums(const DenseMatrix& a);

double total_sum(const DenseMatrix& a);
double total_sum(const DenseVector& a);

// sqrt of the mean square over all entries.
double rms(const DenseMatrix& a);
double rms(const DenseVector& a);

bool all_finite(const DenseMatrix& a);
bool all_finite(const DenseVector& a);

DenseMatrix square(const DenseMatrix& a);
DenseVector square(const DenseVector& a);
DenseMatrix divide(const DenseMatrix& num, const DenseMatrix& den);
DenseVector divide(const DenseVector& num, const DenseVector& den);

// acc = beta * acc + (1 - beta) * x, shapes must agree.
void ema_update(DenseMatrix& acc, const DenseMatrix& x, double beta);
void ema_update(DenseVector& acc, const DenseVector& x, double beta);

// y += a * x
void axpy(double a, const DenseMatrix& x, DenseMatrix& y);
void axpy(double a, const DenseVector& x, DenseVector& y);

}  // namespace factopt
