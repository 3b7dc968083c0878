#include "activation.hpp"

namespace mupre {

ResMlpModel::ResMlpModel(std::size_t width, std::size_t depth, double residual_mult, Activation act)
    : width_(width), depth_(depth), mult_(residual_mult) {
  if (width == 0 || depth == 0) throw DimensionError("width and depth must be positive");
  act_ = act;
  manifest_ = resmlp_manifest(width, depth);
  weights_.emplace_back(width, 1);
  for (std::size_t l = 0; l < depth; ++l) weights_.emplace_back(width, width);
  weights_.emplace_back(1, width);
}

// Cache layout: h[0] = x0 = W_in ξ, h[ℓ] = W_ℓ x_{ℓ-1}, h[L+1] = f;
// x[k] is the input of weight k, so x[ℓ] = x_{ℓ-1} and x[L+1] = x_L.
std::pair<double, Cache> ResMlpModel::forward(const Batch& batch) const {
  if (batch.targets.size() != batch.inputs.size()) throw DimensionError("batch inputs/targets differ in length");
  if (batch.inputs.empty()) throw DimensionError("empty batch");
  Cache c;
  Matrix xi = batch.input_row();
  Matrix x = matmul(weights_[0], xi);
  c.x.push_back(std::move(xi));
  c.h.push_back(x);
  for (std::size_t l = 1; l <= depth_; ++l) {
    Matrix h = matmul(weights_[l], x);
    c.x.push_back(x);
    x += mult_ * detail::apply(act_, h);
    c.h.push_back(std::move(h));
  }
  c.h.push_back(matmul(weights_.back(), x));
  c.x.push_back(std::move(x));
  c.targets = Matrix::row(batch.targets);
  c.valid = true;
  const double loss = detail::mse(c.h.back(), c.targets, nullptr);
  return {loss, std::move(c)};
}

std::vector<Matrix> ResMlpModel::backward(const Cache& cache) const {
  if (!cache.valid || cache.h.size() != weights_.size()) throw Error("backward needs a forward cache of this model");
  const std::size_t n = weights_.size();
  std::vector<Matrix> grads(n);
  Matrix df;
  detail::mse(cache.h.back(), cache.targets, &df);
  grads[n - 1] = matmul_nt(df, cache.x[n - 1]);
  Matrix gx = matmul_tn(weights_[n - 1], df);  // ∂loss/∂x_L
  for (std::size_t l = depth_; l >= 1; --l) {
    const Matrix dh = detail::backprop_act(act_, gx, cache.h[l], mult_);
    grads[l] = matmul_nt(dh, cache.x[l]);
    gx += matmul_tn(weights_[l], dh);
  }
  grads[0] = matmul_nt(gx, cache.x[0]);
  return grads;
}

}  // namespace mupre
