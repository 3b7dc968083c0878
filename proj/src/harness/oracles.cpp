#include <cmath>

#include "mupre/harness.hpp"

namespace mupre {

namespace {

struct Span {
  std::size_t start, size;
};

std::vector<Span> tiles(std::size_t n, std::optional<std::size_t> b) {
  std::vector<Span> out;
  const std::size_t step = b ? std::min(*b, n) : n;
  for (std::size_t s = 0; s < n; s += step) out.push_back({s, std::min(step, n - s)});
  return out;
}

double sub_dot(const std::vector<double>& a, const std::vector<double>& b, Span s) {
  double acc = 0.0;
  for (std::size_t k = s.start; k < s.start + s.size; ++k) acc += a[k] * b[k];
  return acc;
}

// a / (|a| + eps); exact zeros map to zero when eps = 0 (the optimizer's
// roundoff floor), otherwise a zero denominator is an error.
double ratio(double a, double eps, bool zero_ok) {
  const double den = std::abs(a) + eps;
  if (den == 0.0) {
    if (zero_ok) return 0.0;
    throw DivisionError("eps = 0 with zero second moment");
  }
  return a / den;
}

// Elementwise Adam on o_ij = s·u_i·v_j restricted to one block.
void adam_block(const std::vector<double>& u, const std::vector<double>& v, const std::vector<double>& xp, double s,
                double eps, Span rows, Span cols, bool zero_ok, Rank1Update& out, double& frob2) {
  for (std::size_t i = rows.start; i < rows.start + rows.size; ++i)
    for (std::size_t j = cols.start; j < cols.start + cols.size; ++j) {
      const double q = ratio(s * u[i] * v[j], eps, zero_ok);
      out.qx[i] += q * xp[j];
      frob2 += q * q;
    }
}

Rank1Update rule_update(Rule rule, const OptimizerConfig& cfg, const std::vector<double>& delta,
                        const std::vector<double>& x, const std::vector<double>& xp) {
  const std::size_t d_out = delta.size(), d_in = x.size();
  Rank1Update out;
  out.qx.assign(d_out, 0.0);
  double frob2 = 0.0;
  const double nd = norm2(delta), nx = norm2(x);

  switch (rule) {
    case Rule::SGD: {
      const double c = dot(x, xp);
      for (std::size_t i = 0; i < d_out; ++i) out.qx[i] = delta[i] * c;
      out.frob = nd * nx;
      return out;
    }
    case Rule::Adam:
      adam_block(delta, x, xp, 1.0, cfg.eps, {0, d_out}, {0, d_in}, false, out, frob2);
      break;
    case Rule::Shampoo:
      for (Span r : tiles(d_out, cfg.block_out))
        for (Span c : tiles(d_in, cfg.block_in)) {
          const double lam = sub_dot(delta, delta, r) * sub_dot(x, x, c);
          if (lam == 0.0) continue;
          const double eps = cfg.eps_mode == EpsMode::relative ? cfg.eps * lam : cfg.eps;
          double f = 1.0;
          if (cfg.e_left != 0.0) f *= std::pow(lam + eps, -cfg.e_left);
          if (cfg.e_right != 0.0) f *= std::pow(lam + eps, -cfg.e_right);
          const double k = f * sub_dot(x, xp, c);
          for (std::size_t i = r.start; i < r.start + r.size; ++i) out.qx[i] += k * delta[i];
          frob2 += f * f * lam;
        }
      break;
    case Rule::SOAP: {
      const bool left = cfg.e_left != 0.0, right = cfg.e_right != 0.0;
      for (Span r : tiles(d_out, cfg.block_out))
        for (Span c : tiles(d_in, cfg.block_in)) {
          const double bd = std::sqrt(sub_dot(delta, delta, r));
          const double bx = std::sqrt(sub_dot(x, x, c));
          if (!left && !right) {
            adam_block(delta, x, xp, 1.0, cfg.eps, r, c, false, out, frob2);
          } else if (bd == 0.0 || bx == 0.0) {
            continue;  // zero block
          } else if (left && right) {
            const double g = bd * bx;
            const double k = g / (g + cfg.eps);
            const double proj = sub_dot(x, xp, c) / bx;
            for (std::size_t i = r.start; i < r.start + r.size; ++i) out.qx[i] += k * proj * delta[i] / bd;
            frob2 += k * k;
          } else if (left) {
            // δ̂ ⊗ r with r_j = |δ| x_j / (|δ||x_j| + ε)
            double rx = 0.0;
            for (std::size_t j = c.start; j < c.start + c.size; ++j) {
              const double rj = ratio(bd * x[j], cfg.eps, true);
              rx += rj * xp[j];
              frob2 += rj * rj;
            }
            for (std::size_t i = r.start; i < r.start + r.size; ++i) out.qx[i] += rx * delta[i] / bd;
          } else {
            // c ⊗ x̂ with c_i = |x| δ_i / (|x||δ_i| + ε)
            const double proj = sub_dot(x, xp, c) / bx;
            for (std::size_t i = r.start; i < r.start + r.size; ++i) {
              const double ci = ratio(bx * delta[i], cfg.eps, true);
              out.qx[i] += ci * proj;
              frob2 += ci * ci;
            }
          }
        }
      break;
    }
    case Rule::Muon: {
      NewtonSchulzConfig ns;
      ns.iters = cfg.ns_iters;
      ns.polish_iters = cfg.ns_polish;
      ns.eps = cfg.eps;
      const double s = newton_schulz_scalar(nd * nx, ns);
      const double proj = dot(x, xp) / nx;
      for (std::size_t i = 0; i < d_out; ++i) out.qx[i] = s * proj * delta[i] / nd;
      out.frob = s;
      return out;
    }
    case Rule::AdaMuon: {
      NewtonSchulzConfig ns;
      ns.iters = cfg.ns_iters;
      ns.polish_iters = cfg.ns_polish;
      ns.eps = cfg.ns_eps;
      const double s = newton_schulz_scalar(nd * nx, ns);
      std::vector<double> u(delta), v(x);
      for (double& a : u) a /= nd;
      for (double& a : v) a /= nx;
      adam_block(u, v, xp, s, cfg.eps, {0, d_out}, {0, d_in}, false, out, frob2);
      out.frob = std::sqrt(frob2);
      if (cfg.rms_align && out.frob > 0.0) {
        const double k = 0.2 * std::sqrt(static_cast<double>(d_in * d_out)) / out.frob;
        for (double& q : out.qx) q *= k;
        out.frob *= k;
      }
      return out;
    }
  }
  out.frob = std::sqrt(frob2);
  return out;
}

}  // namespace

double newton_schulz_scalar(double sigma, const NewtonSchulzConfig& cfg) {
  if (sigma == 0.0) return 0.0;
  double s = sigma / (sigma + cfg.eps);
  const auto [a, b, c] = cfg.coeffs;
  for (int i = 0; i < cfg.iters; ++i) {
    const double g = s * s;
    s = a * s + (b * g + c * g * g) * s;
  }
  for (int i = 0; i < cfg.polish_iters; ++i) s = 1.5 * s - 0.5 * s * s * s;
  return s;
}

Rank1Update rank1_update(const OptimizerConfig& opt, const std::vector<double>& delta, const std::vector<double>& x,
                         const std::vector<double>& x_probe) {
  if (x.size() != x_probe.size()) throw DimensionError("probe and input lengths differ");
  if (delta.empty() || x.empty()) throw DimensionError("empty rank-1 factor");
  if (norm2(delta) == 0.0 || norm2(x) == 0.0) throw UndefinedError("rank-1 oracle needs nonzero delta and x");
  if (opt.normalize == Normalize::spectral)
    throw ConfigError("rank-1 oracle does not model power-iteration state");

  Rank1Update q = rule_update(opt.rule, opt, delta, x, x_probe);
  if (opt.graft_rule) {
    OptimizerConfig ref = opt;
    ref.rule = *opt.graft_rule;
    ref.eps = opt.graft_ref_eps;
    ref.eps_mode = EpsMode::absolute;
    ref.block_in.reset();
    ref.block_out.reset();
    const Rank1Update r = rule_update(ref.rule, ref, delta, x, x_probe);
    const double den = q.frob + opt.graft_eps;
    if (den > 0.0) {
      const double k = r.frob / den;
      for (double& v : q.qx) v *= k;
      q.frob *= k;
    }
  }
  if (opt.normalize == Normalize::rms && q.frob > 0.0) {
    const double d_in = static_cast<double>(x.size()), d_out = static_cast<double>(delta.size());
    const double k = (1.0 / std::sqrt(d_in)) / (q.frob / std::sqrt(d_in * d_out));
    for (double& v : q.qx) v *= k;
    q.frob *= k;
  }
  return q;
}

std::vector<double> rank1_oracle(const OptimizerConfig& opt, const std::vector<double>& delta,
                                 const std::vector<double>& x, const std::vector<double>& x_probe, double eta) {
  std::vector<double> out = rank1_update(opt, delta, x, x_probe).qx;
  for (double& v : out) v *= eta;
  return out;
}

namespace {

// V f(λ) Vᵀ with f applied only above the pseudo-inverse cutoff; below it the
// eigenvalue is treated as an exact zero and mapped to `at_zero`.
Matrix gram_fn(const EigDecomp& e, double cutoff, const std::function<double(double)>& f, double at_zero) {
  return spectral_apply(e, [&](double l) { return l > cutoff ? f(l) : at_zero; });
}

double cutoff_of(const EigDecomp& e) { return 1e-10 * std::max(e.values.front(), 0.0); }

// Kernel K_a^{+1/2}·(S + εI)^{-e}·K_a^{1/2} with S = K_a^{1/2} K_b K_a^{1/2}.
Matrix side_kernel(const Matrix& ka, const Matrix& kb, double eps, double e, bool forward) {
  const std::size_t n = ka.rows();
  if (e == 0.0) return Matrix::identity(n);
  const EigDecomp ea = sym_eig(ka);
  const double ca = cutoff_of(ea);
  const Matrix half = gram_fn(ea, ca, [](double l) { return std::sqrt(l); }, 0.0);
  const Matrix inv_half = gram_fn(ea, ca, [](double l) { return 1.0 / std::sqrt(l); }, 0.0);
  Matrix s = matmul(matmul(half, kb), half);
  s = 0.5 * (s + s.transposed());
  const EigDecomp es = sym_eig(s);
  const double cs = cutoff_of(es);
  // Null directions of S never reach the output (they are annihilated by the
  // surrounding factors); map them to 0 so ε = 0 stays finite.
  const Matrix p = gram_fn(es, cs, [&](double l) { return std::pow(l + eps, -e); }, eps > 0.0 ? std::pow(eps, -e) : 0.0);
  return forward ? matmul(matmul(inv_half, p), half) : matmul(matmul(half, p), inv_half);
}

}  // namespace

Matrix gram_oracle_shampoo(const Matrix& delta, const Matrix& x, double eps, double e_left, double e_right) {
  if (delta.cols() != x.cols()) throw DimensionError("Delta and X need the same batch size");
  if (eps < 0.0) throw ConfigError("eps must be nonnegative");
  const Matrix kd = gram_cols(delta);
  const Matrix kx = gram_cols(x);
  const Matrix pl = side_kernel(kd, kx, eps, e_left, true);
  const Matrix pr = side_kernel(kx, kd, eps, e_right, false);
  return matmul_nt(matmul(delta, matmul(pl, pr)), x);
}

}  // namespace mupre
