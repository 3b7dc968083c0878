#include <algorithm>
#include <cmath>
#include <string>

#include "mupre/linalg.hpp"
#include "mupre/rng.hpp"

namespace mupre {

namespace {
// Below this, ‖Aᵀy‖ is treated as numerically zero by the skip rule.
constexpr double kPowerEps = 1e-30;
}

Matrix newton_schulz(const Matrix& m, int iters) {
  NewtonSchulzConfig cfg;
  cfg.iters = iters;
  return newton_schulz(m, cfg);
}

Matrix newton_schulz(const Matrix& m, const NewtonSchulzConfig& cfg) {
  if (cfg.iters < 0 || cfg.polish_iters < 0) throw Error("newton_schulz: negative iteration count");
  const double norm = frob_norm(m);
  if (norm == 0.0) return Matrix(m.rows(), m.cols());

  const bool wide = m.rows() < m.cols();
  Matrix x = wide ? m.transposed() : m;
  x /= norm + cfg.eps;

  const auto [a, b, c] = cfg.coeffs;
  for (int i = 0; i < cfg.iters; ++i) {
    const Matrix g = gram_cols(x);
    Matrix poly = matmul(g, g);
    poly.axpby(c, b, g);  // b·g + c·g²
    Matrix next = matmul(x, poly);
    next.axpby(1.0, a, x);
    x = std::move(next);
  }
  for (int i = 0; i < cfg.polish_iters; ++i) {
    Matrix next = matmul(x, gram_cols(x));
    next.axpby(-0.5, 1.5, x);
    x = std::move(next);
  }
  return wide ? x.transposed() : x;
}

PowerIterState power_iter_init(std::size_t n, unsigned long long seed) {
  Rng rng(seed);
  PowerIterState s;
  s.v = rng.normal_vec(n);
  double nv = norm2(s.v);
  if (nv == 0.0) {
    s.v.assign(n, 0.0);
    if (n) s.v[0] = 1.0;
    nv = 1.0;
  }
  for (double& x : s.v) x /= nv;
  return s;
}

PowerIterState power_iter_step(const Matrix& a, const PowerIterState& state) {
  if (state.v.size() != a.cols()) {
    throw DimensionError("power_iter_step: vector length " + std::to_string(state.v.size()) +
                         " vs " + std::to_string(a.cols()) + " columns");
  }
  PowerIterState next;
  const std::vector<double> y = matvec(a, state.v);
  next.sigma_hat = norm2(y);
  std::vector<double> z = matvec_t(a, y);
  const double nz = norm2(z);
  if (nz / (nz + kPowerEps) < 0.5) {
    next.v = state.v;
  } else {
    for (double& zi : z) zi /= nz;
    next.v = std::move(z);
  }
  return next;
}

double spectral_norm_exact(const Matrix& a) {
  if (a.empty()) return 0.0;
  const Matrix g = a.rows() <= a.cols() ? gram_rows(a) : gram_cols(a);
  const std::vector<double> w = sym_eigvals(g);
  return std::sqrt(std::max(w.front(), 0.0));
}

double stable_rank(const Matrix& a) {
  const double f = frob_norm(a);
  if (f == 0.0) throw UndefinedError("stable_rank: zero matrix");
  const double s = spectral_norm_exact(a);
  return (f * f) / (s * s);
}

Matrix polar_factor_exact(const Matrix& a, double rel_cutoff) {
  const EigDecomp eig = sym_eig(gram_cols(a));
  const std::size_t n = a.cols();
  const double top = std::sqrt(std::max(eig.values.front(), 0.0));
  Matrix out(a.rows(), a.cols());
  if (top == 0.0) return out;
  for (std::size_t k = 0; k < n; ++k) {
    const double sigma = std::sqrt(std::max(eig.values[k], 0.0));
    if (sigma <= rel_cutoff * top) break;
    const std::vector<double> vk = eig.vectors.col_vec(k);
    std::vector<double> uk = matvec(a, vk);
    for (double& u : uk) u /= sigma;
    out += Matrix::outer(uk, vk);
  }
  return out;
}

}  // namespace mupre
