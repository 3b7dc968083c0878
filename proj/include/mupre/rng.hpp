#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mupre/linalg.hpp"

namespace mupre {

// mt19937_64 engine with a hand-rolled Box-Muller transform, so draws do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }
  double uniform();  // [0, 1)
  double normal();
  std::vector<double> normal_vec(std::size_t n, double scale = 1.0);
  Matrix normal_matrix(std::size_t rows, std::size_t cols, double scale = 1.0);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stateless seed mixing (splitmix64 finalizer) for per-run / per-layer streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace mupre
