#include <cmath>

#include "doctest.h"
#include "mupre/models.hpp"
#include "mupre/rng.hpp"
#include "test_helpers.hpp"

using namespace mupre;
using mupre::testing::rel_err;

namespace {

// Central differences over every weight entry.
std::vector<Matrix> fd_grads(Model& m, const Batch& b, double step = 1e-5) {
  std::vector<Matrix> out;
  for (Matrix& w : m.weights()) {
    Matrix g(w.rows(), w.cols());
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double keep = w.data()[k];
      w.data()[k] = keep + step;
      const double up = m.forward(b).first;
      w.data()[k] = keep - step;
      const double dn = m.forward(b).first;
      w.data()[k] = keep;
      g.data()[k] = (up - dn) / (2 * step);
    }
    out.push_back(g);
  }
  return out;
}

Batch random_batch(unsigned seed, std::size_t n) {
  Rng rng(seed);
  return Batch{rng.normal_vec(n), rng.normal_vec(n), seed};
}

}  // namespace

TEST_CASE("forward trivial and hand-computed cases") {
  MlpModel zero({1, 4, 4, 1});
  const Batch b{{0.3, -1.0}, {0.0, 0.0}, 0};
  CHECK(zero.forward(b).first == 0.0);

  // linear, 1 hidden layer: f = w2ᵀ (w1 ξ)
  MlpModel lin({1, 2, 1}, Activation::identity);
  lin.weights()[0] = Matrix{{1.0}, {2.0}};
  lin.weights()[1] = Matrix{{3.0, -1.0}};
  const Batch one{{2.0}, {0.5}, 0};
  // f = 3*2 - 1*4 = 2; loss = ½ (2 - 0.5)² = 1.125
  CHECK(lin.forward(one).first == doctest::Approx(1.125).epsilon(1e-15));

  MlpModel t = make_teacher(3);
  for (unsigned s = 0; s < 5; ++s) CHECK(t.forward(synth_batch(s, 8, t)).first == 0.0);
  MlpModel student({1, 8, 8, 1});
  student.initialize({0.1, 0.3, 0.3}, 1);
  for (unsigned s = 0; s < 5; ++s) CHECK(student.forward(synth_batch(s, 8, t)).first >= 0.0);
}

TEST_CASE("mlp gradients match finite differences") {
  for (Activation a : {Activation::tanh, Activation::identity}) {
    MlpModel m({1, 8, 8, 8, 1}, a);
    m.initialize({0.7, 0.4, 0.4, 0.5}, 42);
    const Batch b = random_batch(1, 5);
    const auto g = m.backward(m.forward(b).second);
    const auto fd = fd_grads(m, b);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(rel_err(g[k], fd[k]) < 1e-5);
  }
}

TEST_CASE("resmlp gradients match finite differences") {
  for (double mult : {1.0, 0.25}) {
    ResMlpModel m(6, 4, mult);
    m.initialize({0.8, 0.4, 0.4, 0.4, 0.4, 0.5}, 7);
    const Batch b = random_batch(2, 3);
    const auto g = m.backward(m.forward(b).second);
    const auto fd = fd_grads(m, b);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(rel_err(g[k], fd[k]) < 1e-5);
  }
}

TEST_CASE("batch-one gradients are rank one and zero residual gives zero gradient") {
  MlpModel m({1, 16, 16, 1});
  m.initialize({1.0, 0.25, 0.25}, 3);
  const Batch b{{0.7}, {2.0}, 0};
  const auto g = m.backward(m.forward(b).second);
  for (const Matrix& gk : g) CHECK(std::abs(stable_rank(gk) - 1.0) < 1e-8);

  // target equal to the prediction -> zero residual
  Batch exact{{0.7}, m.predict({0.7}), 0};
  for (const Matrix& gk : m.backward(m.forward(exact).second)) CHECK(max_abs(gk) == 0.0);
  CHECK_THROWS_AS(m.backward(Cache{}), Error);
}

TEST_CASE("residual model with zero blocks is the identity map") {
  ResMlpModel m(8, 5, 0.2);
  m.initialize({0.5, 0, 0, 0, 0, 0, 0.3}, 9);
  const Batch b = random_batch(4, 6);
  const Cache c = m.forward(b).second;
  CHECK(max_abs(c.x.back() - c.h.front()) == 0.0);
  // loss equals that of the linear predictor w_out W_in ξ
  const double k = matmul(m.weights().back(), m.weights().front())(0, 0);
  double loss = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) loss += 0.5 * std::pow(k * b.inputs[i] - b.targets[i], 2);
  CHECK(m.forward(b).first == doctest::Approx(loss / b.size()).epsilon(1e-13));
}

TEST_CASE("coord_probe") {
  Cache a, b;
  a.h = {Matrix::column({0, 0})};
  b.h = {Matrix::column({3, 4})};
  CHECK(coord_probe(a, a, 0) == 0.0);
  CHECK(std::abs(coord_probe(a, b, 0) - std::sqrt(12.5)) < 1e-14);
  Cache c;
  c.h = {Matrix::column({3 / std::sqrt(2.0), 4 / std::sqrt(2.0)})};
  CHECK(std::abs(coord_probe(a, c, 0) - 2.5) < 1e-14);
  CHECK_THROWS_AS(coord_probe(a, b, 1), DimensionError);

  // linear model: scaling a weight perturbation scales the probe linearly
  MlpModel m({1, 4, 4, 1}, Activation::identity);
  m.initialize({1, 0.5, 0.5}, 5);
  const Batch p = random_batch(6, 3);
  const Cache base = m.forward(p).second;
  Rng rng(8);
  const Matrix dir = rng.normal_matrix(4, 4);
  MlpModel m1 = m, m2 = m;
  m1.weights()[1] += 0.1 * dir;
  m2.weights()[1] += 0.3 * dir;
  const double r1 = coord_probe(base, m1.forward(p).second, 1);
  const double r2 = coord_probe(base, m2.forward(p).second, 1);
  CHECK(r2 / r1 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("synth_batch determinism") {
  const MlpModel t = make_teacher(11);
  const Batch a = synth_batch(5, 16, t), b = synth_batch(5, 16, t), c = synth_batch(6, 16, t);
  CHECK(a.inputs == b.inputs);
  CHECK(a.targets == b.targets);
  CHECK(a.inputs != c.inputs);
  double var = 0.0;
  for (double y : synth_batch(1, 512, t).targets) var += y * y;
  CHECK(var / 512 > 1e-3);  // non-degenerate teacher
}

TEST_CASE("feature kernel concentrates with width") {
  // coefficient of variation of x·x'/d over 32 seeds at the second hidden layer
  std::vector<double> cv;
  for (std::size_t d : {64u, 256u, 1024u}) {
    std::vector<double> vals;
    for (unsigned s = 0; s < 32; ++s) {
      MlpModel m({1, d, d, 1});
      const ScalingPlan plan;
      const ModelManifest man = mlp_manifest({1, d, d, 1});
      std::vector<double> sig;
      for (const auto& l : man.layers) sig.push_back(init_sigma(l, plan));
      m.initialize(sig, 1000 + s);
      const Batch b{{0.8, -0.5}, {0, 0}, 0};
      const Cache c = m.forward(b).second;
      const Matrix& x = c.x[2];  // input of the readout = second hidden features
      double k = 0.0;
      for (std::size_t i = 0; i < d; ++i) k += x(i, 0) * x(i, 1);
      vals.push_back(k / d);
    }
    double mean = 0.0, sq = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    for (double v : vals) sq += (v - mean) * (v - mean);
    cv.push_back(std::sqrt(sq / (vals.size() - 1)) / std::abs(mean));
  }
  CHECK(cv[1] < cv[0] * 1.2);
  CHECK(cv[2] < cv[1] * 1.2);
  CHECK(cv[2] < cv[0]);
}
