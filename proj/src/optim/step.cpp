#include "internal.hpp"

namespace mupre {

OptimizerState::OptimizerState(const OptimizerState& o)
    : t(o.t), rows(o.rows), cols(o.cols), m(o.m), v(o.v), layout(o.layout), blocks(o.blocks), pi(o.pi),
      reference(o.reference ? std::make_unique<OptimizerState>(*o.reference) : nullptr) {}

OptimizerState& OptimizerState::operator=(const OptimizerState& o) {
  if (this != &o) {
    OptimizerState tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

OptimizerState make_state(std::size_t d_in, const OptimizerConfig& cfg, unsigned long long seed) {
  validate(cfg);
  OptimizerState s;
  s.pi = power_iter_init(d_in, seed);
  if (cfg.graft_rule) s.reference = std::make_unique<OptimizerState>();
  return s;
}

namespace {
OptimizerConfig reference_config(const OptimizerConfig& cfg) {
  OptimizerConfig r = cfg;
  r.rule = *cfg.graft_rule;
  r.graft_rule.reset();
  r.eps = cfg.graft_ref_eps;
  r.eps_mode = EpsMode::absolute;
  r.block_in.reset();
  r.block_out.reset();
  r.normalize = Normalize::none;
  r.e_left = r.e_right = 0.0;
  return r;
}
}  // namespace

UpdateReport step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg) {
  Matrix u = detail::rule_update(s, g, cfg);
  if (cfg.graft_rule) {
    if (!s.reference) s.reference = std::make_unique<OptimizerState>();
    const Matrix q1 = detail::rule_update(*s.reference, g, reference_config(cfg));
    const double den = frob_norm(u) + cfg.graft_eps;
    if (den > 0.0) u *= frob_norm(q1) / den;
  }
  switch (cfg.normalize) {
    case Normalize::none:
      break;
    case Normalize::spectral: {
      auto [n, pi] = spectral_normalize(u, s.pi, g.rows(), g.cols());
      u = std::move(n);
      s.pi = std::move(pi);
      break;
    }
    case Normalize::rms:
      u = rms_normalize(u, g.rows(), g.cols());
      break;
  }
  return UpdateReport::measure(std::move(u), cfg.measure_spectrum);
}

}  // namespace mupre
