#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "mupre/errors.hpp"

namespace mupre {

// Dense row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diag(const std::vector<double>& d);
  static Matrix column(const std::vector<double>& v);
  static Matrix row(const std::vector<double>& v);
  static Matrix outer(const std::vector<double>& a, const std::vector<double>& b);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  Matrix transposed() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);
  std::vector<double> col_vec(std::size_t j) const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);
  Matrix& operator/=(double s);
  // this <- a*this + b*o
  Matrix& axpby(double a, double b, const Matrix& o);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix hadamard(const Matrix& a, const Matrix& b);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a bᵀ
// a aᵀ and aᵀ a, exactly symmetric.
Matrix gram_rows(const Matrix& a);
Matrix gram_cols(const Matrix& a);
std::vector<double> matvec(const Matrix& a, const std::vector<double>& v);
std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& v);

double frob_norm(const Matrix& a);
double rms(const Matrix& a);
double max_abs(const Matrix& a);
double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& v);
bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);
bool all_finite(const Matrix& a);

// ---- symmetric eigendecomposition ----

struct EigDecomp {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns orthonormal
};

enum class EigMethod { automatic, jacobi, tridiagonal };

// Above this dimension `automatic` switches to Householder tridiagonalization.
inline constexpr std::size_t kJacobiMaxDim = 8;
inline constexpr double kJacobiTol = 1e-12;
inline constexpr int kJacobiMaxSweeps = 50;

EigDecomp sym_eig(const Matrix& a, EigMethod method = EigMethod::automatic);
std::vector<double> sym_eigvals(const Matrix& a);

// V f(λ) Vᵀ
Matrix spectral_apply(const EigDecomp& eig, const std::function<double(double)>& f);
Matrix mat_inv_power(const Matrix& a, double e, double eps);
// Negative eigenvalues are clamped to zero first.
Matrix inv_power_from_eig(const EigDecomp& eig, double e, double eps);

// ---- Newton-Schulz ----

struct NewtonSchulzConfig {
  std::array<double, 3> coeffs{3.4445, -4.7750, 2.0315};
  int iters = 5;
  // Cubic (1.5, -0.5) iterations appended after the quintic ones. The quintic
  // map alone leaves singular values oscillating inside roughly [0.7, 1.2].
  int polish_iters = 3;
  double eps = 1e-7;
};

Matrix newton_schulz(const Matrix& m, const NewtonSchulzConfig& cfg = {});
Matrix newton_schulz(const Matrix& m, int iters);

// ---- spectral estimates ----

struct PowerIterState {
  std::vector<double> v;
  double sigma_hat = 0.0;
};

PowerIterState power_iter_init(std::size_t n, unsigned long long seed);
PowerIterState power_iter_step(const Matrix& a, const PowerIterState& state);

double spectral_norm_exact(const Matrix& a);
double stable_rank(const Matrix& a);

// Polar factor U Vᵀ from a dense eigendecomposition of aᵀa. Reference for
// Newton-Schulz checks.
Matrix polar_factor_exact(const Matrix& a, double rel_cutoff = 1e-10);

}  // namespace mupre
