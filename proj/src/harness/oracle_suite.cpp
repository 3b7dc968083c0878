#include <cmath>
#include <functional>

#include "mupre/harness.hpp"
#include "mupre/rng.hpp"

namespace mupre {

namespace {

double vec_rel(const std::vector<double>& got, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - ref[i]) * (got[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double log_uniform(Rng& rng, double lo, double hi) { return lo * std::pow(hi / lo, rng.uniform()); }

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

std::optional<std::size_t> maybe_block(Rng& rng) {
  if (rng.uniform() < 0.5) return std::nullopt;
  return dim(rng, 1, 12);
}

struct Draw {
  std::vector<double> delta, x, xp;
};

Draw draw(Rng& rng) {
  const std::size_t d_out = dim(rng, 2, 40), d_in = dim(rng, 2, 40);
  return {rng.normal_vec(d_out), rng.normal_vec(d_in), rng.normal_vec(d_in)};
}

std::vector<double> step_through_probe(const OptimizerConfig& c, const Draw& d) {
  OptimizerState s = make_state(d.x.size(), c, 0);
  return matvec(step(s, Matrix::outer(d.delta, d.x), c).update, d.xp);
}

OptimizerConfig fresh(Rule r) {
  OptimizerConfig c = default_config(r);
  c.beta1 = 0.0;
  c.beta2 = 0.0;
  c.measure_spectrum = false;
  return c;
}

using Tweak = std::function<void(OptimizerConfig&, Rng&)>;

OracleCheck rank1_family(const std::string& name, Rule rule, const Tweak& tweak, Rng& rng, int draws, double tol) {
  OracleCheck out{name, 0.0, tol, draws};
  for (int k = 0; k < draws; ++k) {
    OptimizerConfig c = fresh(rule);
    tweak(c, rng);
    const Draw d = draw(rng);
    out.max_rel_err = std::max(out.max_rel_err, vec_rel(step_through_probe(c, d), rank1_oracle(c, d.delta, d.x, d.xp, 1.0)));
  }
  return out;
}

Matrix dense_shampoo(const Matrix& delta, const Matrix& x, double eps, double el, double er) {
  const Matrix g = matmul_nt(delta, x);
  return matmul(matmul(mat_inv_power(gram_rows(g), el, eps), g), mat_inv_power(gram_cols(g), er, eps));
}

}  // namespace

std::vector<OracleCheck> oracle_suite(unsigned long long seed, int draws, const OracleTolerances& tol) {
  if (draws <= 0) throw ConfigError("oracle draws must be positive");
  Rng rng(derive_seed(seed, 0x0c1e));
  std::vector<OracleCheck> out;

  for (double e : {0.25, 0.5})
    for (EpsMode mode : {EpsMode::absolute, EpsMode::relative}) {
      const std::string name = std::string("shampoo e=") + (e == 0.25 ? "1/4" : "1/2") + " " + to_string(mode);
      out.push_back(rank1_family(
          name, Rule::Shampoo,
          [&](OptimizerConfig& c, Rng& r) {
            c.e_left = c.e_right = e;
            c.eps_mode = mode;
            c.eps = log_uniform(r, 1e-4, 1.0);
            c.block_in = maybe_block(r);
            c.block_out = maybe_block(r);
          },
          rng, draws, tol.rank1));
    }

  for (auto [el, er, label] : {std::tuple{1.0, 1.0, "both"}, {1.0, 0.0, "left"}, {0.0, 1.0, "right"},
                               {0.0, 0.0, "none"}}) {
    out.push_back(rank1_family(
        std::string("soap ") + label, Rule::SOAP,
        [&](OptimizerConfig& c, Rng& r) {
          c.e_left = el;
          c.e_right = er;
          c.eps = log_uniform(r, 1e-4, 1.0);
          c.block_in = maybe_block(r);
          c.block_out = maybe_block(r);
        },
        rng, draws, tol.rank1));
  }

  const Tweak eps_only = [](OptimizerConfig& c, Rng& r) { c.eps = log_uniform(r, 1e-6, 1e-1); };
  out.push_back(rank1_family("sgd", Rule::SGD, [](OptimizerConfig&, Rng&) {}, rng, draws, tol.rank1));
  out.push_back(rank1_family("adam", Rule::Adam, eps_only, rng, draws, tol.rank1));
  out.push_back(rank1_family("muon", Rule::Muon, eps_only, rng, draws, tol.rank1));
  out.push_back(rank1_family(
      "adamuon", Rule::AdaMuon,
      [](OptimizerConfig& c, Rng& r) {
        c.eps = log_uniform(r, 1e-6, 1e-1);
        c.rms_align = r.uniform() < 0.5;
      },
      rng, draws, tol.rank1));
  out.push_back(rank1_family(
      "adam#shampoo", Rule::Shampoo,
      [](OptimizerConfig& c, Rng& r) {
        c.graft_rule = Rule::Adam;
        c.graft_ref_eps = log_uniform(r, 1e-6, 1e-1);
        c.graft_eps = log_uniform(r, 1e-9, 1e-3);
        c.block_in = c.block_out = maybe_block(r);
      },
      rng, draws, tol.rank1));

  // Muon against the exact polar factor of δxᵀ.
  OracleCheck polar{"muon vs polar", 0.0, tol.muon_polar, draws};
  for (int k = 0; k < draws; ++k) {
    const Draw d = draw(rng);
    const Matrix p = polar_factor_exact(Matrix::outer(d.delta, d.x));
    polar.max_rel_err = std::max(polar.max_rel_err, vec_rel(step_through_probe(fresh(Rule::Muon), d), matvec(p, d.xp)));
  }
  out.push_back(polar);

  OracleCheck gram{"gram shampoo", 0.0, tol.gram, 0};
  OracleCheck pinv{"gram shampoo rank-deficient", 0.0, tol.gram_pinv, 0};
  for (std::size_t b : {1u, 2u, 4u})
    for (std::size_t d : {8u, 32u})
      for (auto [el, er] : {std::pair{0.25, 0.25}, {0.5, 0.5}, {0.5, 0.0}, {0.0, 0.25}}) {
        const Matrix delta = rng.normal_matrix(d, b), x = rng.normal_matrix(d, b);
        const double eps = log_uniform(rng, 1e-3, 1.0);
        const Matrix ref = dense_shampoo(delta, x, eps, el, er);
        gram.max_rel_err = std::max(gram.max_rel_err,
                                    frob_norm(gram_oracle_shampoo(delta, x, eps, el, er) - ref) / frob_norm(ref));
        ++gram.draws;
        if (b < 2) continue;
        // duplicate the first column: K_δ and K_x lose a rank
        Matrix dd = delta, xx = x;
        for (std::size_t i = 0; i < d; ++i) {
          dd(i, b - 1) = dd(i, 0);
          xx(i, b - 1) = xx(i, 0);
        }
        const Matrix ref2 = dense_shampoo(dd, xx, eps, el, er);
        const Matrix got = gram_oracle_shampoo(dd, xx, eps, el, er);
        const double err = all_finite(got) ? frob_norm(got - ref2) / frob_norm(ref2) : INFINITY;
        pinv.max_rel_err = std::max(pinv.max_rel_err, err);
        ++pinv.draws;
      }
  out.push_back(gram);
  out.push_back(pinv);
  return out;
}

}  // namespace mupre
