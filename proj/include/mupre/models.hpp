#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mupre/linalg.hpp"
#include "mupre/scaling.hpp"

namespace mupre {

enum class Activation { tanh, relu, identity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct Batch {
  std::vector<double> inputs;
  std::vector<double> targets;
  unsigned long long seed = 0;

  std::size_t size() const { return inputs.size(); }
  Matrix input_row() const { return Matrix::row(inputs); }
};

// h[k] is the output of weight k (pre-activation; the last one is f),
// x[k] the input it consumed.
struct Cache {
  std::vector<Matrix> x;
  std::vector<Matrix> h;
  Matrix targets;  // 1 x B
  bool valid = false;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::pair<double, Cache> forward(const Batch& batch) const = 0;
  virtual std::vector<Matrix> backward(const Cache& cache) const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const ModelManifest& manifest() const { return manifest_; }
  Activation activation() const { return act_; }

  // W_k ~ sigma[k] * N(0, 1), one derived stream per layer.
  void initialize(const std::vector<double>& sigma, unsigned long long seed);
  std::vector<double> predict(const std::vector<double>& inputs) const;

 protected:
  std::vector<Matrix> weights_;
  ModelManifest manifest_;
  Activation act_ = Activation::tanh;
};

// x0 = ξ, h_ℓ = W_ℓ x_{ℓ-1}, x_ℓ = φ(h_ℓ), f = w_Lᵀ x_{L-1}; loss = mean ½(f - y)².
class MlpModel : public Model {
 public:
  // widths = {1, D, ..., D, 1}; first layer is the embedding, last the readout.
  MlpModel(std::vector<std::size_t> widths, Activation act = Activation::tanh);

  std::pair<double, Cache> forward(const Batch& batch) const override;
  std::vector<Matrix> backward(const Cache& cache) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<MlpModel>(*this); }

  const std::vector<std::size_t>& widths() const { return widths_; }

 private:
  std::vector<std::size_t> widths_;
};

// x0 = W_in ξ, x_ℓ = x_{ℓ-1} + m·φ(W_ℓ x_{ℓ-1}) for ℓ = 1..L, f = w_outᵀ x_L.
// Weight order: W_in, W_1..W_L, w_out.
class ResMlpModel : public Model {
 public:
  ResMlpModel(std::size_t width, std::size_t depth, double residual_mult, Activation act = Activation::tanh);

  std::pair<double, Cache> forward(const Batch& batch) const override;
  std::vector<Matrix> backward(const Cache& cache) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<ResMlpModel>(*this); }

  std::size_t width() const { return width_; }
  std::size_t depth() const { return depth_; }
  double residual_mult() const { return mult_; }

 private:
  std::size_t width_;
  std::size_t depth_;
  double mult_;
};

ModelManifest mlp_manifest(const std::vector<std::size_t>& widths);
ModelManifest resmlp_manifest(std::size_t width, std::size_t depth);

// rms(after.h[layer] - before.h[layer]) over every entry.
double coord_probe(const Cache& before, const Cache& after, std::size_t layer);

// Fixed random tanh MLP used to label inputs.
MlpModel make_teacher(unsigned long long seed, std::size_t width = 32);
Batch synth_batch(unsigned long long seed, std::size_t batch_size, const Model& teacher);

}  // namespace mupre
