#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mupre/linalg.hpp"

namespace mupre {

enum class Rule { SGD, Adam, Shampoo, SOAP, Muon, AdaMuon };
enum class Normalize { none, spectral, rms };
enum class EpsMode { absolute, relative };
enum class WeightDecayMode { independent, coupled };

std::string to_string(Rule r);
std::string to_string(Normalize n);
std::string to_string(EpsMode m);
Rule parse_rule(const std::string& s);
Normalize parse_normalize(const std::string& s);
EpsMode parse_eps_mode(const std::string& s);

struct OptimizerConfig {
  Rule rule = Rule::Adam;
  // Shampoo: inverse-root exponents. SOAP: 0/1 flags for rotating each side.
  double e_left = 0.25;
  double e_right = 0.25;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  EpsMode eps_mode = EpsMode::absolute;
  std::optional<Rule> graft_rule;
  double graft_eps = 1e-8;
  double graft_ref_eps = 1e-8;  // ε of the reference optimizer
  std::optional<std::size_t> block_in;
  std::optional<std::size_t> block_out;
  Normalize normalize = Normalize::none;
  int precond_freq = 1;
  int ns_iters = 5;
  int ns_polish = 3;
  double ns_eps = 1e-7;  // AdaMuon pre-normalization
  bool rms_align = false;
  // Fill UpdateReport::spec / srank (costs a dense eigensolve per step).
  bool measure_spectrum = true;
};

// Per-rule defaults: Shampoo gets relative ε = 1e-5, SOAP gets both sides on.
OptimizerConfig default_config(Rule rule);
void validate(const OptimizerConfig& cfg);
bool uses_blocks(const OptimizerConfig& cfg);

// ---- blocking ----

struct BlockLayout {
  std::vector<std::size_t> row_start, row_size, col_start, col_size;
  std::size_t n_out() const { return row_start.size(); }
  std::size_t n_in() const { return col_start.size(); }
  std::size_t count() const { return n_out() * n_in(); }
};

// Block sizes larger than the matrix are clamped to the matrix size.
BlockLayout make_layout(std::size_t rows, std::size_t cols, std::size_t b_out, std::size_t b_in);

struct BlockedMatrix {
  BlockLayout layout;
  std::vector<Matrix> blocks;  // row-major over the block grid
};

BlockedMatrix block_partition(const Matrix& g, std::size_t b_out, std::size_t b_in);
BlockedMatrix split(const Matrix& g, const BlockLayout& layout);
Matrix reassemble(const BlockedMatrix& b);

// ---- state ----

struct PreconditionerBlock {
  Matrix left;   // EMA of G Gᵀ
  Matrix right;  // EMA of Gᵀ G
  Matrix left_op;   // Shampoo: (L̂+εI)^{-e_L};  SOAP: eigenbasis Q_L
  Matrix right_op;  // Shampoo: (R̂+εI)^{-e_R};  SOAP: eigenbasis Q_R
};

struct OptimizerState {
  std::size_t t = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Matrix m;  // first moment
  Matrix v;  // second moment (Adam, SOAP in rotated coordinates, AdaMuon)
  BlockLayout layout;
  std::vector<PreconditionerBlock> blocks;
  PowerIterState pi;
  std::unique_ptr<OptimizerState> reference;  // grafting reference Q₁

  OptimizerState() = default;
  OptimizerState(const OptimizerState& o);
  OptimizerState& operator=(const OptimizerState& o);
  OptimizerState(OptimizerState&&) = default;
  OptimizerState& operator=(OptimizerState&&) = default;
};

// Moments and factors are sized lazily on the first step; d_in seeds the
// power-iteration vector used by spectral normalization.
OptimizerState make_state(std::size_t d_in, const OptimizerConfig& cfg, unsigned long long seed = 0);

struct UpdateReport {
  Matrix update;
  double frob = 0.0;
  double spec = 0.0;   // NaN when not measured
  double srank = 0.0;  // 0 for a zero update, NaN when not measured

  static UpdateReport measure(Matrix u, bool spectrum = true);
};

// Raw update rules. Each advances state.t before use and never applies the
// learning rate.
UpdateReport sgd_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
UpdateReport adam_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
UpdateReport shampoo_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
UpdateReport soap_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
UpdateReport muon_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
UpdateReport adamuon_step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);

// Rule dispatch followed by grafting and normalization wrappers.
UpdateReport step(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);

// ---- wrappers ----

UpdateReport graft(const UpdateReport& q1, const UpdateReport& q2, double eps);
std::pair<Matrix, PowerIterState> spectral_normalize(const Matrix& update, const PowerIterState& state,
                                                     std::size_t d_out, std::size_t d_in);
Matrix spectral_normalize_exact(const Matrix& update, std::size_t d_out, std::size_t d_in);
Matrix rms_normalize(const Matrix& update, std::size_t d_out, std::size_t d_in);
Matrix apply_weight_decay(const Matrix& w, double lambda, WeightDecayMode mode, double eta);

}  // namespace mupre
