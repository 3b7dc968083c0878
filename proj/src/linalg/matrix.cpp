#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "mupre/linalg.hpp"

namespace mupre {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Matrix& m) { return ConstMap(m.data(), m.rows(), m.cols()); }
MutMap view(Matrix& m) { return MutMap(m.data(), m.rows(), m.cols()); }

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape " + shape(a) + " vs " + shape(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Matrix: " + std::to_string(data_.size()) + " values for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(const std::vector<double>& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::column(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }
Matrix Matrix::row(const std::vector<double>& v) { return Matrix(1, v.size(), v); }

Matrix Matrix::outer(const std::vector<double>& a, const std::vector<double>& b) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionError("block: out of range");
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    std::copy_n(&data_[(r0 + i) * cols_ + c0], nc, &b.data_[i * nc]);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) throw DimensionError("set_block: out of range");
  for (std::size_t i = 0; i < b.rows_; ++i)
    std::copy_n(&b.data_[i * b.cols_], b.cols_, &data_[(r0 + i) * cols_ + c0]);
}

std::vector<double> Matrix::col_vec(std::size_t j) const {
  std::vector<double> v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same(*this, o, "+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same(*this, o, "-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix& Matrix::operator/=(double s) {
  for (double& x : data_) x /= s;
  return *this;
}

Matrix& Matrix::axpby(double a, double b, const Matrix& o) {
  require_same(*this, o, "axpby");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] = a * data_[k] + b * o.data_[k];
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same(a, b, "hadamard");
  Matrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c.values()[k] *= b.values()[k];
  return c;
}

namespace {

Matrix gemm(const Matrix& a, bool ta, const Matrix& b, bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t ka = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (ka != kb) throw DimensionError("matmul: inner dimension " + shape(a) + " vs " + shape(b));
  Matrix c(m, n);
  if (m == 0 || n == 0 || ka == 0) return c;
  auto out = view(c);
  if (!ta && !tb) out.noalias() = view(a) * view(b);
  else if (ta && !tb) out.noalias() = view(a).transpose() * view(b);
  else if (!ta && tb) out.noalias() = view(a) * view(b).transpose();
  else out.noalias() = view(a).transpose() * view(b).transpose();
  return c;
}

Matrix syrk(const Matrix& a, bool trans) {
  const std::size_t n = trans ? a.cols() : a.rows();
  Matrix c(n, n);
  if (n == 0 || a.empty()) return c;
  auto out = view(c);
  if (trans) out.selfadjointView<Eigen::Upper>().rankUpdate(view(a).transpose());
  else out.selfadjointView<Eigen::Upper>().rankUpdate(view(a));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i);
  return c;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) { return gemm(a, false, b, false); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return gemm(a, true, b, false); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return gemm(a, false, b, true); }
Matrix gram_rows(const Matrix& a) { return syrk(a, false); }
Matrix gram_cols(const Matrix& a) { return syrk(a, true); }

std::vector<double> matvec(const Matrix& a, const std::vector<double>& v) {
  if (v.size() != a.cols()) throw DimensionError("matvec: " + shape(a) + " times length " + std::to_string(v.size()));
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& v) {
  if (v.size() != a.rows()) throw DimensionError("matvec_t: " + shape(a) + "ᵀ times length " + std::to_string(v.size()));
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * v[i];
  return y;
}

double frob_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.values()) s += x * x;
  return std::sqrt(s);
}

double rms(const Matrix& a) {
  if (a.empty()) return 0.0;
  return frob_norm(a) / std::sqrt(static_cast<double>(a.size()));
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double tol = rel_tol * std::max(1e-300, max_abs(a));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace mupre
