#include <algorithm>
#include <cmath>

#include "mupre/harness.hpp"

namespace mupre {

FitResult exponent_fit(const std::vector<double>& xs, const std::vector<double>& values) {
  if (xs.size() != values.size()) throw DimensionError("exponent_fit: length mismatch");
  if (xs.size() < 2) throw UndefinedError("exponent_fit needs at least two points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(values[i]))
      throw UndefinedError("exponent_fit: log of a non-positive or non-finite value");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(values[i]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw UndefinedError("exponent_fit: all x values are equal");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (r.intercept + r.slope * lx[i]);
    ss_res += e * e;
  }
  r.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return r;
}

MultiplierResult compute_multiplier(const std::vector<std::pair<double, double>>& baseline,
                                    std::pair<double, double> candidate) {
  if (baseline.size() < 2) throw UndefinedError("compute_multiplier needs at least two baseline points");
  auto pts = baseline;
  for (const auto& [c, l] : pts)
    if (!(c > 0.0) || !(l > 0.0) || !std::isfinite(c) || !std::isfinite(l))
      throw UndefinedError("compute_multiplier: compute and loss must be positive and finite");
  const auto [cand_c, cand_l] = candidate;
  if (!(cand_c > 0.0) || !(cand_l > 0.0)) throw UndefinedError("compute_multiplier: bad candidate point");

  std::sort(pts.begin(), pts.end());
  MultiplierResult res;
  // Monotone envelope: keep points that strictly improve on every cheaper one.
  std::vector<std::pair<double, double>> env;
  for (const auto& p : pts) {
    if (!env.empty() && p.second >= env.back().second) {
      res.non_monotone = true;
      continue;
    }
    env.push_back(p);
  }
  if (env.size() < 2) throw UndefinedError("compute_multiplier: baseline loss never decreases");

  // log C as a piecewise-linear function of log loss (loss decreasing in C).
  const double ll = std::log(cand_l);
  std::size_t k = 0;
  if (cand_l > env.front().second) {
    res.extrapolated = true;
    k = 0;
  } else if (cand_l < env.back().second) {
    res.extrapolated = true;
    k = env.size() - 2;
  } else {
    while (k + 2 < env.size() && env[k + 1].second > cand_l) ++k;
  }
  const double l0 = std::log(env[k].second), l1 = std::log(env[k + 1].second);
  const double c0 = std::log(env[k].first), c1 = std::log(env[k + 1].first);
  const double log_c = c0 + (ll - l0) * (c1 - c0) / (l1 - l0);
  res.baseline_compute = std::exp(log_c);
  res.multiplier = res.baseline_compute / cand_c;
  return res;
}

}  // namespace mupre
