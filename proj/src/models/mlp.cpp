#include <algorithm>
#include <cctype>

#include "activation.hpp"
#include "mupre/rng.hpp"

namespace mupre {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "tanh") return Activation::tanh;
  if (k == "relu") return Activation::relu;
  if (k == "identity" || k == "linear") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "'");
}

void Model::initialize(const std::vector<double>& sigma, unsigned long long seed) {
  if (sigma.size() != weights_.size()) throw DimensionError("one init scale per layer required");
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    Rng rng(derive_seed(seed, 0x1417, k));
    Matrix& w = weights_[k];
    if (sigma[k] == 0.0) {
      w = Matrix(w.rows(), w.cols());
      continue;
    }
    w = rng.normal_matrix(w.rows(), w.cols(), sigma[k]);
  }
}

std::vector<double> Model::predict(const std::vector<double>& inputs) const {
  Batch b{inputs, std::vector<double>(inputs.size(), 0.0), 0};
  const Cache c = forward(b).second;
  return c.h.back().values();
}

MlpModel::MlpModel(std::vector<std::size_t> widths, Activation act) : widths_(std::move(widths)) {
  act_ = act;
  manifest_ = mlp_manifest(widths_);
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) weights_.emplace_back(widths_[k + 1], widths_[k]);
}

std::pair<double, Cache> MlpModel::forward(const Batch& batch) const {
  if (batch.targets.size() != batch.inputs.size()) throw DimensionError("batch inputs/targets differ in length");
  if (batch.inputs.empty()) throw DimensionError("empty batch");
  Cache c;
  Matrix x = batch.input_row();
  const std::size_t n = weights_.size();
  for (std::size_t k = 0; k < n; ++k) {
    Matrix h = matmul(weights_[k], x);
    c.x.push_back(std::move(x));
    if (k + 1 < n) x = detail::apply(act_, h);
    c.h.push_back(std::move(h));
  }
  c.targets = Matrix::row(batch.targets);
  c.valid = true;
  const double loss = detail::mse(c.h.back(), c.targets, nullptr);
  return {loss, std::move(c)};
}

std::vector<Matrix> MlpModel::backward(const Cache& cache) const {
  if (!cache.valid || cache.h.size() != weights_.size()) throw Error("backward needs a forward cache of this model");
  const std::size_t n = weights_.size();
  std::vector<Matrix> grads(n);
  Matrix delta;
  detail::mse(cache.h.back(), cache.targets, &delta);
  for (std::size_t k = n; k-- > 0;) {
    grads[k] = matmul_nt(delta, cache.x[k]);
    if (k > 0) delta = detail::backprop_act(act_, matmul_tn(weights_[k], delta), cache.h[k - 1]);
  }
  return grads;
}

double coord_probe(const Cache& before, const Cache& after, std::size_t layer) {
  if (layer >= before.h.size() || layer >= after.h.size()) throw DimensionError("probe layer out of range");
  return rms(after.h[layer] - before.h[layer]);
}

}  // namespace mupre
