#include "factopt/tensor.hpp"

#include <stdexcept>
#include <string>

#include "factopt/kernels.hpp"

namespace factopt {

namespace {

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": size mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

void check_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

}  // namespace

DenseVector::DenseVector(std::size_t len, double fill) : data_(len, fill) {
  if (len == 0) throw std::invalid_argument("DenseVector: length must be positive");
}

DenseVector DenseVector::of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("DenseVector: length must be positive");
  DenseVector v;
  v.data_ = std::move(values);
  return v;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("DenseMatrix: dimensions must be positive");
}

DenseMatrix DenseMatrix::of(std::size_t rows, std::size_t cols,
                            std::vector<double> values) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("DenseMatrix: dimensions must be positive");
  if (values.size() != rows * cols)
    throw std::invalid_argument("DenseMatrix: value count does not match shape");
  DenseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(values);
  return m;
}

DenseVector row_sums(const DenseMatrix& a) {
  DenseVector out(a.rows());
  kernels::row_sums(a.flat(), a.rows(), a.cols(), out.flat());
  return out;
}

DenseVector col_sums(const DenseMatrix& a) {
  DenseVector out(a.cols());
  kernels::col_sums(a.flat(), a.rows(), a.cols(), out.flat());
  return out;
}

double total_sum(const DenseMatrix& a) { return kernels::sum(a.flat()); }
double total_sum(const DenseVector& a) { return kernels::sum(a.flat()); }

double rms(const DenseMatrix& a) { return kernels::rms(a.flat()); }
double rms(const DenseVector& a) { return kernels::rms(a.flat()); }

bool all_finite(const DenseMatrix& a) { return kernels::all_finite(a.flat()); }
bool all_finite(const DenseVector& a) { return kernels::all_finite(a.flat()); }

DenseMatrix square(const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols());
  kernels::square(a.flat(), out.flat());
  return out;
}

DenseVector square(const DenseVector& a) {
  DenseVector out(a.size());
  kernels::square(a.flat(), out.flat());
  return out;
}

DenseMatrix divide(const DenseMatrix& num, const DenseMatrix& den) {
  check_same_shape(num, den, "divide");
  DenseMatrix out(num.rows(), num.cols());
  kernels::divide(num.flat(), den.flat(), out.flat());
  return out;
}

DenseVector divide(const DenseVector& num, const DenseVector& den) {
  check_same_size(num.size(), den.size(), "divide");
  DenseVector out(num.size());
  kernels::divide(num.flat(), den.flat(), out.flat());
  return out;
}

void ema_update(DenseMatrix& acc, const DenseMatrix& x, double beta) {
  check_same_shape(acc, x, "ema_update");
  kernels::ema_update(acc.flat(), x.flat(), beta);
}

void ema_update(DenseVector& acc, const DenseVector& x, double beta) {
  check_same_size(acc.size(), x.size(), "ema_update");
  kernels::ema_update(acc.flat(), x.flat(), beta);
}

void axpy(double a, const DenseMatrix& x, DenseMatrix& y) {
  check_same_shape(x, y, "axpy");
  kernels::axpy(a, x.flat(), y.flat());
}

void axpy(double a, const DenseVector& x, DenseVector& y) {
  check_same_size(x.size(), y.size(), "axpy");
  kernels::axpy(a, x.flat(), y.flat());
}

}  // namespace factopt
