#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mupre/optim.hpp"

namespace mupre {

enum class Role { embedding, hidden, readout, bias };
enum class Param { SP, muP, spectral_norm, muon_kimi_theta1, muon_kimi_adamexp, muon_adamexp };
enum class WdMode { constant, inv_width };

std::string to_string(Role r);
std::string to_string(Param p);
std::string to_string(WdMode m);
Role parse_role(const std::string& s);
Param parse_param(const std::string& s);
WdMode parse_wd_mode(const std::string& s);

struct LayerSpec {
  std::string name;
  Role role = Role::hidden;
  std::size_t d_in = 1;
  std::size_t d_out = 1;
  bool in_residual = false;
  std::size_t depth_L = 1;
  std::optional<std::size_t> b_in;
  std::optional<std::size_t> b_out;
  // Model width D this layer belongs to, and which fans grow with it. A
  // scaling fan of size d corresponds to d * D_base / D at the base shape.
  std::size_t width = 1;
  bool fan_in_scales = true;
  bool fan_out_scales = true;

  std::size_t n_in() const;
  std::size_t n_out() const;
  std::size_t n_blk() const { return n_in() * n_out(); }
};

// Fan flags from the role: embedding (vocab -> D), hidden (D -> D),
// readout (D -> vocab), bias (1 -> D).
LayerSpec make_layer(std::string name, Role role, std::size_t d_in, std::size_t d_out, std::size_t width);
void validate(const LayerSpec& spec);

struct ScalingPlan {
  Param param = Param::muP;
  std::size_t base_width = 64;
  std::size_t base_depth = 1;
  double eta_base = 1e-2;
  double wd_base = 0.0;
  WdMode wd_mode = WdMode::constant;
  double alpha_depth = 1.0;
  double init_c = 1.0;  // hidden init σ = c/√d_in
};

void validate(const ScalingPlan& plan);
// SP ignores alpha_depth.
double effective_alpha(const ScalingPlan& plan);
bool is_alt_muon(Param p);

struct LayerHyper {
  double eta = 0.0;
  double eps = 0.0;
  double sigma_init = 0.0;
  double residual_mult = 1.0;
  double lambda_wd = 0.0;

  bool operator==(const LayerHyper&) const = default;
};

double lr_multiplier(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan);
// ε factor of the primary rule.
double eps_scale(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan);
// ε factor of the grafting reference rule, and of the graft denominator guard.
double reference_eps_scale(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan);
double graft_eps_scale(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan);
double init_sigma(const LayerSpec& spec, const ScalingPlan& plan);
double residual_multiplier(std::size_t depth, double alpha);
double wd_scale(std::size_t width, std::size_t base_width, WdMode mode);
double alt_muon_multiplier(const LayerSpec& spec, Param variant, const ScalingPlan& plan);

struct ModelManifest {
  std::size_t width = 1;
  std::size_t depth = 1;
  std::vector<LayerSpec> layers;
};

struct NamedHyper {
  std::string name;
  LayerHyper hyper;
};

using PlanTable = std::vector<NamedHyper>;

PlanTable build_plan(const ModelManifest& manifest, const OptimizerConfig& opt, const ScalingPlan& plan);

// Object mapping layer name -> {eta, eps, sigma_init, residual_mult, lambda_wd}.
std::string plan_to_json(const PlanTable& table, int indent = 2);
PlanTable plan_from_json(const std::string& text);

}  // namespace mupre
