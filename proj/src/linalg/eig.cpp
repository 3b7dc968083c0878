#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mupre/linalg.hpp"

namespace mupre {

namespace {

void check_symmetric_input(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("sym_eig: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", not square");
  }
  if (!is_symmetric(a)) throw AsymmetryError("sym_eig: matrix not symmetric to 1e-10");
}

// Flip each eigenvector so its largest-magnitude entry is positive; keeps the
// output independent of which solver produced it.
void canonicalize_signs(Matrix& v) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < v.cols(); ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v(i, j)) > best + 1e-12) {
        best = std::abs(v(i, j));
        arg = i;
      }
    }
    if (v(arg, j) < 0)
      for (std::size_t i = 0; i < n; ++i) v(i, j) = -v(i, j);
  }
}

EigDecomp sorted(std::vector<double> w, const Matrix& vecs) {
  const std::size_t n = w.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return w[i] > w[j]; });
  EigDecomp out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = w[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = vecs(i, order[k]);
  }
  canonicalize_signs(out.vectors);
  return out;
}

EigDecomp jacobi(const Matrix& input) {
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  const double scale = frob_norm(a);
  const double target = kJacobiTol * scale;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < kJacobiMaxSweeps; ++sweep) {
    if (off_norm() <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kJacobiMaxSweeps && off_norm() > target) {
    throw ConvergenceError("sym_eig: Jacobi did not converge in " + std::to_string(kJacobiMaxSweeps) + " sweeps");
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = a(i, i);
  return sorted(std::move(w), v);
}

using ColMat = Eigen::MatrixXd;

ColMat to_eigen(const Matrix& a) {
  ColMat m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

// Householder tridiagonalization + implicit symmetric QR.
EigDecomp tridiagonal(const Matrix& input) {
  const std::size_t n = input.rows();
  Eigen::SelfAdjointEigenSolver<ColMat> es(to_eigen(input));
  if (es.info() != Eigen::Success) throw ConvergenceError("sym_eig: tridiagonal QR did not converge");
  std::vector<double> w(n);
  Matrix v(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = es.eigenvalues()(k);
    for (std::size_t i = 0; i < n; ++i) v(i, k) = es.eigenvectors()(i, k);
  }
  return sorted(std::move(w), v);
}

}  // namespace

EigDecomp sym_eig(const Matrix& a, EigMethod method) {
  check_symmetric_input(a);
  if (a.rows() == 0) return {};
  if (method == EigMethod::automatic) {
    method = a.rows() <= kJacobiMaxDim ? EigMethod::jacobi : EigMethod::tridiagonal;
  }
  return method == EigMethod::jacobi ? jacobi(a) : tridiagonal(a);
}

std::vector<double> sym_eigvals(const Matrix& a) {
  check_symmetric_input(a);
  if (a.rows() <= kJacobiMaxDim) return jacobi(a).values;
  Eigen::SelfAdjointEigenSolver<ColMat> es(to_eigen(a), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("sym_eigvals: tridiagonal QR did not converge");
  std::vector<double> w(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
  std::reverse(w.begin(), w.end());
  return w;
}

Matrix spectral_apply(const EigDecomp& eig, const std::function<double(double)>& f) {
  const std::size_t n = eig.values.size();
  Matrix scaled = eig.vectors;  // V diag(f)
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) scaled(i, k) *= fk;
  }
  Matrix out = matmul_nt(scaled, eig.vectors);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i) = 0.5 * (out(i, j) + out(j, i));
  return out;
}

Matrix inv_power_from_eig(const EigDecomp& eig, double e, double eps) {
  const std::size_t n = eig.values.size();
  if (e == 0.0) return Matrix::identity(n);
  if (eps < 0) throw SingularityError("mat_inv_power: negative eps");
  for (double lam : eig.values) {
    if (std::max(lam, 0.0) + eps <= 0.0) {
      throw SingularityError("mat_inv_power: zero eigenvalue with eps = 0");
    }
  }
  return spectral_apply(eig, [&](double lam) { return std::pow(std::max(lam, 0.0) + eps, -e); });
}

Matrix mat_inv_power(const Matrix& a, double e, double eps) {
  if (e == 0.0) {
    check_symmetric_input(a);
    return Matrix::identity(a.rows());
  }
  return inv_power_from_eig(sym_eig(a), e, eps);
}

}  // namespace mupre
