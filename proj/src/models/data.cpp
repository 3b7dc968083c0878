#include <cmath>

#include "mupre/models.hpp"
#include "mupre/rng.hpp"

namespace mupre {

ModelManifest mlp_manifest(const std::vector<std::size_t>& widths) {
  if (widths.size() < 3) throw ConfigError("an MLP needs at least one hidden width");
  if (widths.front() != 1 || widths.back() != 1) throw ConfigError("MLP input and output must be scalar");
  ModelManifest m;
  m.width = widths[1];
  m.depth = 1;
  const std::size_t n = widths.size() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (widths[k + 1] == 0) throw ConfigError("MLP widths must be positive");
    const Role role = k == 0 ? Role::embedding : (k + 1 == n ? Role::readout : Role::hidden);
    m.layers.push_back(make_layer("layer" + std::to_string(k + 1), role, widths[k], widths[k + 1], m.width));
  }
  return m;
}

ModelManifest resmlp_manifest(std::size_t width, std::size_t depth) {
  ModelManifest m;
  m.width = width;
  m.depth = depth;
  m.layers.push_back(make_layer("embed", Role::embedding, 1, width, width));
  for (std::size_t l = 1; l <= depth; ++l) {
    LayerSpec s = make_layer("block" + std::to_string(l), Role::hidden, width, width, width);
    s.in_residual = true;
    s.depth_L = depth;
    m.layers.push_back(s);
  }
  m.layers.push_back(make_layer("readout", Role::readout, width, 1, width));
  return m;
}

MlpModel make_teacher(unsigned long long seed, std::size_t width) {
  MlpModel t({1, width, width, 1}, Activation::tanh);
  const double s = 1.0 / std::sqrt(static_cast<double>(width));
  t.initialize({1.0, s, 2.0 * s}, derive_seed(seed, 0x7eac));
  return t;
}

Batch synth_batch(unsigned long long seed, std::size_t batch_size, const Model& teacher) {
  if (batch_size == 0) throw DimensionError("batch size must be positive");
  Rng rng(derive_seed(seed, 0xba7c));
  Batch b;
  b.seed = seed;
  b.inputs = rng.normal_vec(batch_size);
  b.targets = teacher.predict(b.inputs);
  return b;
}

}  // namespace mupre
