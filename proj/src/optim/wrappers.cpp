#include <cmath>
#include <limits>

#include "mupre/optim.hpp"

namespace mupre {

UpdateReport UpdateReport::measure(Matrix u, bool spectrum) {
  UpdateReport r;
  r.frob = frob_norm(u);
  if (!spectrum) {
    r.spec = r.srank = std::numeric_limits<double>::quiet_NaN();
  } else if (r.frob > 0.0) {
    r.spec = spectral_norm_exact(u);
    r.srank = r.frob * r.frob / (r.spec * r.spec);
  }
  r.update = std::move(u);
  return r;
}

UpdateReport graft(const UpdateReport& q1, const UpdateReport& q2, double eps) {
  if (!q1.update.same_shape(q2.update)) throw DimensionError("graft: shape mismatch");
  const double den = q2.frob + eps;
  UpdateReport r;
  if (den == 0.0) {
    r.update = q2.update;
    return r;
  }
  const double c = q1.frob / den;
  r.update = c * q2.update;
  r.frob = c * q2.frob;
  r.spec = c * q2.spec;
  r.srank = q2.srank;
  return r;
}

std::pair<Matrix, PowerIterState> spectral_normalize(const Matrix& update, const PowerIterState& state,
                                                     std::size_t d_out, std::size_t d_in) {
  if (max_abs(update) == 0.0) return {update, state};
  PowerIterState next = power_iter_step(update, state);
  if (next.sigma_hat == 0.0) return {update, next};
  const double scale = std::sqrt(static_cast<double>(d_out) / static_cast<double>(d_in)) / next.sigma_hat;
  return {scale * update, next};
}

Matrix spectral_normalize_exact(const Matrix& update, std::size_t d_out, std::size_t d_in) {
  const double s = spectral_norm_exact(update);
  if (s == 0.0) return update;
  return (std::sqrt(static_cast<double>(d_out) / static_cast<double>(d_in)) / s) * update;
}

Matrix rms_normalize(const Matrix& update, std::size_t d_out, std::size_t d_in) {
  (void)d_out;  // √(d_out/d_in)/√d_out
  const double r = rms(update);
  if (r == 0.0) return update;
  const double target = 1.0 / std::sqrt(static_cast<double>(d_in));
  return (target / r) * update;
}

Matrix apply_weight_decay(const Matrix& w, double lambda, WeightDecayMode mode, double eta) {
  if (!(lambda >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  const double f = mode == WeightDecayMode::independent ? lambda : eta * lambda;
  return (1.0 - f) * w;
}

}  // namespace mupre
