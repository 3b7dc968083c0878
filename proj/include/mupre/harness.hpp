#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mupre/models.hpp"
#include "mupre/optim.hpp"
#include "mupre/scaling.hpp"

namespace mupre {

// ---- oracles ----

// Analytic Q(δxᵀ) for a fresh state at t = 1 with β₁ = β₂ = 0.
struct Rank1Update {
  std::vector<double> qx;  // Q x'
  double frob = 0.0;       // ‖Q‖_F
};

Rank1Update rank1_update(const OptimizerConfig& opt, const std::vector<double>& delta, const std::vector<double>& x,
                         const std::vector<double>& x_probe);
// η · Q(δxᵀ) x'
std::vector<double> rank1_oracle(const OptimizerConfig& opt, const std::vector<double>& delta,
                                 const std::vector<double>& x, const std::vector<double>& x_probe, double eta);

// Singular value reached by the Newton-Schulz schedule applied to a rank-1
// input of singular value sigma.
double newton_schulz_scalar(double sigma, const NewtonSchulzConfig& cfg);

// Shampoo update (L+εI)^{-e_L} G (R+εI)^{-e_R} of G = Δ Xᵀ, built from the
// B x B Gram matrices K_δ = ΔᵀΔ and K_x = XᵀX only. Rank-deficient K's use
// pseudo-inverse square roots (cutoff 1e-10 of the top eigenvalue).
Matrix gram_oracle_shampoo(const Matrix& delta, const Matrix& x, double eps, double e_left, double e_right);

// Agreement of the closed-form and Gram-matrix oracles with the optimizer
// module over random draws; one entry per optimizer family.
struct OracleCheck {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  int draws = 0;
  bool passed() const { return max_rel_err <= tolerance; }
};

struct OracleTolerances {
  double rank1 = 1e-8;
  double muon_polar = 0.05;
  double gram = 1e-8;
  double gram_pinv = 1e-6;
};

std::vector<OracleCheck> oracle_suite(unsigned long long seed, int draws, const OracleTolerances& tol = {});

// ---- regression / estimators ----

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

FitResult exponent_fit(const std::vector<double>& xs, const std::vector<double>& values);

struct MultiplierResult {
  double multiplier = 0.0;
  double baseline_compute = 0.0;
  bool extrapolated = false;
  bool non_monotone = false;  // baseline needed its monotone envelope
};

MultiplierResult compute_multiplier(const std::vector<std::pair<double, double>>& baseline,
                                    std::pair<double, double> candidate);

// ---- training runs ----

enum class Arch { mlp, resmlp };
std::string to_string(Arch a);
Arch parse_arch(const std::string& s);

struct RunSpec {
  std::string run_id;
  Arch arch = Arch::mlp;
  std::size_t width = 64;
  std::size_t depth = 3;  // mlp: weight layers; resmlp: residual blocks
  Activation activation = Activation::tanh;
  OptimizerConfig opt;
  ScalingPlan plan;
  WeightDecayMode wd_mode = WeightDecayMode::independent;
  std::size_t steps = 300;
  std::size_t batch_size = 32;
  std::size_t probe_size = 16;
  std::vector<std::size_t> probe_steps{10, 200};
  bool record_every_step = false;
  // Residual blocks start at zero (outputs vanish at init) instead of the
  // plan's hidden σ.
  bool zero_init_blocks = true;
  // Per-layer hyperparameters replacing the plan's values, matched by name.
  PlanTable overrides;
  unsigned long long seed = 0;
};

struct MetricRecord {
  std::string run_id;
  std::size_t width = 0;
  std::size_t depth = 0;
  std::size_t step = 0;
  double eta_base = 0.0;
  double loss = 0.0;
  std::string layer;
  double delta_h_rms = 0.0;
  double srank = 0.0;
  double spec_norm = 0.0;
};

struct RunResult {
  RunSpec spec;
  std::vector<std::string> layers;
  std::vector<MetricRecord> records;
  bool diverged = false;
  std::size_t diverged_at = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // probe-set loss after the last step; +inf when diverged

  // delta_h_rms of `layer` at `step`, if recorded.
  std::optional<double> delta_h(std::size_t step, const std::string& layer) const;
};

std::unique_ptr<Model> build_model(const RunSpec& spec);
PlanTable plan_for(const RunSpec& spec);
RunResult run_training(const RunSpec& spec);

// Runs independent jobs on up to `jobs` threads; results keep input order.
std::vector<RunResult> run_all(const std::vector<RunSpec>& specs, unsigned jobs = 1);

// ---- experiments ----

struct SweepConfig {
  Arch arch = Arch::mlp;
  std::vector<std::size_t> widths{64, 128, 256, 512};
  std::vector<std::size_t> depths{3};
  Activation activation = Activation::tanh;
  OptimizerConfig opt;
  ScalingPlan plan;
  WeightDecayMode wd_mode = WeightDecayMode::independent;
  std::size_t steps = 300;
  std::size_t batch_size = 32;
  std::size_t probe_size = 16;
  bool zero_init_blocks = true;
  PlanTable overrides;
  std::vector<double> lr_grid;  // eta_base values
  std::vector<unsigned long long> seeds{0};
  std::vector<std::size_t> probe_steps{10, 200};
  // Layers the checks look at; empty means all.
  std::vector<std::string> check_layers;
  // Pass iff max |slope| <= max_abs_slope and/or max slope >= min_slope at
  // the first probe step.
  std::optional<double> max_abs_slope;
  std::optional<double> min_slope;
  std::optional<double> max_drift_octaves;
  std::optional<double> min_drift_octaves;
  std::string name = "run";
  unsigned jobs = 1;
};

void validate(const SweepConfig& cfg);

struct SlopeRow {
  std::size_t probe_step = 0;
  std::string layer;
  FitResult fit;
  std::vector<double> xs;
  std::vector<double> values;
};

struct CheckOutcome {
  bool evaluated = false;
  bool passed = true;
  std::string detail;
};

struct CoordCheckResult {
  std::vector<RunResult> runs;
  std::vector<SlopeRow> slopes;
  std::vector<std::string> excluded;  // run ids dropped for divergence
  CheckOutcome check;

  const SlopeRow* find(std::size_t probe_step, const std::string& layer) const;
};

// Slopes of delta_h_rms vs width (coord_check) or vs depth (depth_check).
CoordCheckResult coord_check(const SweepConfig& cfg);
CoordCheckResult depth_check(const SweepConfig& cfg);

struct SweepCell {
  std::size_t width = 0;
  double eta_base = 0.0;
  double loss = 0.0;  // +inf when diverged
  bool diverged = false;
};

struct LrSweepResult {
  std::vector<RunResult> runs;
  std::vector<SweepCell> cells;
  std::vector<std::pair<std::size_t, double>> argmin;  // width -> best eta_base
  double drift_octaves = 0.0;  // log2(best at largest width / best at smallest)
  CheckOutcome check;
};

LrSweepResult lr_sweep(const SweepConfig& cfg);

struct RankScanRow {
  std::size_t width = 0;
  std::string layer;
  double srank_first = 0.0;
  double srank_last = 0.0;
};

struct RankScanResult {
  std::vector<RunResult> runs;
  std::vector<RankScanRow> summary;
  bool bound_respected = true;  // srank <= min(D, tB) everywhere
  CheckOutcome check;
};

RankScanResult rank_scan(const SweepConfig& cfg);

// ---- records ----

inline constexpr const char* kCsvHeader = "run_id,width,depth,step,eta_base,loss,layer,delta_h_rms,srank,spec_norm";

std::string format_number(double v);
std::string records_to_csv(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> collect_records(const std::vector<RunResult>& runs);
// Write to path.tmp, then rename over path.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace mupre
