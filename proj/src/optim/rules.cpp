#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"

namespace mupre {

namespace {

bool needs_factors(const OptimizerConfig& cfg) { return cfg.rule == Rule::Shampoo || cfg.rule == Rule::SOAP; }

void ensure_state(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  if (g.empty()) throw DimensionError("empty gradient");
  if (s.rows != 0) {
    if (s.rows != g.rows() || s.cols != g.cols())
      throw DimensionError("gradient shape does not match optimizer state");
    return;
  }
  validate(cfg);
  s.rows = g.rows();
  s.cols = g.cols();
  s.m = Matrix(s.rows, s.cols);
  if (cfg.rule == Rule::Adam || cfg.rule == Rule::SOAP || cfg.rule == Rule::AdaMuon) s.v = Matrix(s.rows, s.cols);
  s.layout = make_layout(s.rows, s.cols, cfg.block_out.value_or(s.rows), cfg.block_in.value_or(s.cols));
  if (needs_factors(cfg)) {
    s.blocks.resize(s.layout.count());
    for (std::size_t i = 0; i < s.layout.n_out(); ++i)
      for (std::size_t j = 0; j < s.layout.n_in(); ++j) {
        PreconditionerBlock& b = s.blocks[i * s.layout.n_in() + j];
        if (cfg.e_left != 0.0) b.left = Matrix(s.layout.row_size[i], s.layout.row_size[i]);
        if (cfg.e_right != 0.0) b.right = Matrix(s.layout.col_size[j], s.layout.col_size[j]);
      }
  }
  if (s.pi.v.size() != s.cols) s.pi = power_iter_init(s.cols, 0);
}

double bias(double beta, std::size_t t) { return 1.0 - std::pow(beta, static_cast<double>(t)); }

void check_psd(const std::vector<double>& vals) {
  const double top = std::max(std::abs(vals.front()), std::abs(vals.back()));
  if (vals.back() < -1e-8 * top)
    throw StateCorruptionError("preconditioner accumulator is not PSD (min eigenvalue " +
                               std::to_string(vals.back()) + ")");
}

// Bias-corrected eigendecomposition of one side's accumulator.
EigDecomp side_eig(const Matrix& acc, double bc2) {
  EigDecomp e = sym_eig(acc * (1.0 / bc2));
  check_psd(e.values);
  return e;
}

// Empty matrix stands for the identity.
Matrix shampoo_side(const Matrix& acc, double bc2, double e, const OptimizerConfig& cfg) {
  if (e == 0.0) return {};
  const EigDecomp eig = side_eig(acc, bc2);
  double eps = cfg.eps;
  if (cfg.eps_mode == EpsMode::relative) {
    const double top = std::max(eig.values.front(), 0.0);
    if (top == 0.0) return {};
    eps *= top;
  }
  return inv_power_from_eig(eig, e, eps);
}

Matrix apply_sides(const Matrix& left, const Matrix& x, const Matrix& right) {
  Matrix y = left.empty() ? x : matmul(left, x);
  return right.empty() ? y : matmul(y, right);
}

Matrix rotate_in(const Matrix& ql, const Matrix& x, const Matrix& qr) {
  Matrix y = ql.empty() ? x : matmul_tn(ql, x);
  return qr.empty() ? y : matmul(y, qr);
}

Matrix rotate_out(const Matrix& ql, const Matrix& x, const Matrix& qr) {
  Matrix y = ql.empty() ? x : matmul(ql, x);
  return qr.empty() ? y : matmul_nt(y, qr);
}

// m̂ / (√v̂ + eps), elementwise. With roundoff_floor and eps = 0, entries whose
// √v̂ sits at roundoff level relative to the largest one are zeroed; rotated
// coordinates of a low-rank gradient are never exactly zero.
Matrix adam_ratio(const Matrix& m, const Matrix& v, double bc1, double bc2, double eps, bool roundoff_floor) {
  Matrix out(m.rows(), m.cols());
  const double* pm = m.data();
  const double* pv = v.data();
  double* po = out.data();
  double cut = 0.0;
  if (eps == 0.0 && roundoff_floor) {
    double top = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) top = std::max(top, pv[k]);
    cut = 1e-12 * std::sqrt(top / bc2);
  }
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double den = std::sqrt(pv[k] / bc2) + eps;
    if (cut > 0.0 && den <= cut) {
      po[k] = 0.0;
      continue;
    }
    if (den == 0.0) throw DivisionError("eps = 0 with zero second moment");
    po[k] = (pm[k] / bc1) / den;
  }
  return out;
}

void ema_square(Matrix& v, const Matrix& g, double beta2) {
  double* pv = v.data();
  const double* pg = g.data();
  for (std::size_t k = 0; k < v.size(); ++k) pv[k] = beta2 * pv[k] + (1.0 - beta2) * pg[k] * pg[k];
}

NewtonSchulzConfig ns_config(const OptimizerConfig& cfg, double eps) {
  NewtonSchulzConfig ns;
  ns.iters = cfg.ns_iters;
  ns.polish_iters = cfg.ns_polish;
  ns.eps = eps;
  return ns;
}

bool refresh_due(std::size_t t, int freq) { return (t - 1) % static_cast<std::size_t>(freq) == 0; }

}  // namespace

namespace detail {

Matrix sgd_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  ensure_state(s, g, cfg);
  ++s.t;
  s.m.axpby(cfg.beta1, 1.0 - cfg.beta1, g);
  return s.m;
}

Matrix adam_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  ensure_state(s, g, cfg);
  ++s.t;
  s.m.axpby(cfg.beta1, 1.0 - cfg.beta1, g);
  ema_square(s.v, g, cfg.beta2);
  return adam_ratio(s.m, s.v, bias(cfg.beta1, s.t), bias(cfg.beta2, s.t), cfg.eps, false);
}

Matrix shampoo_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  ensure_state(s, g, cfg);
  ++s.t;
  s.m.axpby(cfg.beta1, 1.0 - cfg.beta1, g);
  if (cfg.e_left == 0.0 && cfg.e_right == 0.0) return s.m;

  const double bc2 = bias(cfg.beta2, s.t);
  const bool refresh = refresh_due(s.t, cfg.precond_freq);
  const BlockedMatrix gb = split(g, s.layout);
  BlockedMatrix mb = split(s.m, s.layout);
  for (std::size_t k = 0; k < s.blocks.size(); ++k) {
    PreconditionerBlock& b = s.blocks[k];
    if (cfg.e_left != 0.0) b.left.axpby(cfg.beta2, 1.0 - cfg.beta2, gram_rows(gb.blocks[k]));
    if (cfg.e_right != 0.0) b.right.axpby(cfg.beta2, 1.0 - cfg.beta2, gram_cols(gb.blocks[k]));
    if (refresh) {
      b.left_op = shampoo_side(b.left, bc2, cfg.e_left, cfg);
      b.right_op = shampoo_side(b.right, bc2, cfg.e_right, cfg);
    }
    mb.blocks[k] = apply_sides(b.left_op, mb.blocks[k], b.right_op);
  }
  return reassemble(mb);
}

Matrix soap_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  ensure_state(s, g, cfg);
  ++s.t;
  s.m.axpby(cfg.beta1, 1.0 - cfg.beta1, g);
  const double bc1 = bias(cfg.beta1, s.t);
  const double bc2 = bias(cfg.beta2, s.t);
  const bool refresh = refresh_due(s.t, cfg.precond_freq);
  const bool rotated = cfg.e_left != 0.0 || cfg.e_right != 0.0;

  const BlockedMatrix gb = split(g, s.layout);
  BlockedMatrix mb = split(s.m, s.layout);
  BlockedMatrix vb = split(s.v, s.layout);
  for (std::size_t k = 0; k < s.blocks.size(); ++k) {
    PreconditionerBlock& b = s.blocks[k];
    if (cfg.e_left != 0.0) {
      b.left.axpby(cfg.beta2, 1.0 - cfg.beta2, gram_rows(gb.blocks[k]));
      if (refresh) b.left_op = side_eig(b.left, bc2).vectors;
    }
    if (cfg.e_right != 0.0) {
      b.right.axpby(cfg.beta2, 1.0 - cfg.beta2, gram_cols(gb.blocks[k]));
      if (refresh) b.right_op = side_eig(b.right, bc2).vectors;
    }
    ema_square(vb.blocks[k], rotate_in(b.left_op, gb.blocks[k], b.right_op), cfg.beta2);
    const Matrix mr = rotate_in(b.left_op, mb.blocks[k], b.right_op);
    const Matrix r = adam_ratio(mr, vb.blocks[k], bc1, bc2, cfg.eps, rotated);
    mb.blocks[k] = rotate_out(b.left_op, r, b.right_op);
  }
  s.v = reassemble(vb);
  return reassemble(mb);
}

Matrix muon_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  ensure_state(s, g, cfg);
  ++s.t;
  s.m.axpby(cfg.beta1, 1.0 - cfg.beta1, g);
  return newton_schulz(s.m, ns_config(cfg, cfg.eps));
}

Matrix adamuon_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  ensure_state(s, g, cfg);
  ++s.t;
  const Matrix o = newton_schulz(g, ns_config(cfg, cfg.ns_eps));
  s.m.axpby(cfg.beta1, 1.0 - cfg.beta1, o);
  ema_square(s.v, o, cfg.beta2);
  Matrix u = adam_ratio(s.m, s.v, bias(cfg.beta1, s.t), bias(cfg.beta2, s.t), cfg.eps, false);
  if (cfg.rms_align) {
    const double f = frob_norm(u);
    if (f > 0.0) u *= 0.2 * std::sqrt(static_cast<double>(s.rows * s.cols)) / f;
  }
  return u;
}

Matrix rule_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  switch (cfg.rule) {
    case Rule::SGD: return sgd_update(s, g, cfg);
    case Rule::Adam: return adam_update(s, g, cfg);
    case Rule::Shampoo: return shampoo_update(s, g, cfg);
    case Rule::SOAP: return soap_update(s, g, cfg);
    case Rule::Muon: return muon_update(s, g, cfg);
    case Rule::AdaMuon: return adamuon_update(s, g, cfg);
  }
  throw ConfigError("unknown rule");
}

}  // namespace detail

UpdateReport sgd_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  return UpdateReport::measure(detail::sgd_update(s, g, cfg), cfg.measure_spectrum);
}
UpdateReport adam_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  return UpdateReport::measure(detail::adam_update(s, g, cfg), cfg.measure_spectrum);
}
UpdateReport shampoo_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  return UpdateReport::measure(detail::shampoo_update(s, g, cfg), cfg.measure_spectrum);
}
UpdateReport soap_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  return UpdateReport::measure(detail::soap_update(s, g, cfg), cfg.measure_spectrum);
}
UpdateReport muon_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  return UpdateReport::measure(detail::muon_update(s, g, cfg), cfg.measure_spectrum);
}
UpdateReport adamuon_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  return UpdateReport::measure(detail::adamuon_update(s, g, cfg), cfg.measure_spectrum);
}

}  // namespace mupre
