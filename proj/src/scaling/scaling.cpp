#include <algorithm>
#include <cctype>
#include <cmath>

#include "mupre/scaling.hpp"

namespace mupre {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Real-valued shape so base dims d * D_base / D need not be integers.
struct Shape {
  double d_in, d_out, depth;
  double b_in, b_out;  // effective block sizes (full dim when unblocked)
  double n_blk;
};

Shape make_shape(double d_in, double d_out, double depth, std::optional<std::size_t> b_in,
                 std::optional<std::size_t> b_out) {
  Shape s{d_in, d_out, depth, d_in, d_out, 1.0};
  double n_in = 1.0, n_out = 1.0;
  if (b_in) {
    s.b_in = std::min<double>(static_cast<double>(*b_in), d_in);
    n_in = std::ceil(d_in / static_cast<double>(*b_in));
  }
  if (b_out) {
    s.b_out = std::min<double>(static_cast<double>(*b_out), d_out);
    n_out = std::ceil(d_out / static_cast<double>(*b_out));
  }
  s.n_blk = n_in * n_out;
  return s;
}

std::optional<std::size_t> pick(std::optional<std::size_t> a, std::optional<std::size_t> b) { return a ? a : b; }

Shape actual(const LayerSpec& spec, const OptimizerConfig& opt) {
  const double depth = spec.in_residual ? static_cast<double>(spec.depth_L) : 1.0;
  return make_shape(double(spec.d_in), double(spec.d_out), depth, pick(spec.b_in, opt.block_in),
                    pick(spec.b_out, opt.block_out));
}

Shape base(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan) {
  const double ratio = static_cast<double>(plan.base_width) / static_cast<double>(spec.width);
  const double d_in = spec.fan_in_scales ? double(spec.d_in) * ratio : double(spec.d_in);
  const double d_out = spec.fan_out_scales ? double(spec.d_out) * ratio : double(spec.d_out);
  const double depth = spec.in_residual ? static_cast<double>(plan.base_depth) : 1.0;
  return make_shape(d_in, d_out, depth, pick(spec.b_in, opt.block_in), pick(spec.b_out, opt.block_out));
}

double lr_formula(Rule rule, const OptimizerConfig& opt, const Shape& s) {
  switch (rule) {
    case Rule::SGD:
      return s.depth * s.d_out / s.d_in;
    case Rule::Adam:
    case Rule::AdaMuon:
      return 1.0 / s.d_in;
    case Rule::Shampoo: {
      const double e = opt.e_left + opt.e_right;
      return std::pow(s.d_out / s.d_in, 1.0 - e) / (std::pow(s.depth, 2.0 * e - 1.0) * std::pow(s.n_blk, e));
    }
    case Rule::SOAP:
      return std::pow(s.b_out, opt.e_left / 2.0) * std::pow(s.b_in, opt.e_right / 2.0) / s.d_in;
    case Rule::Muon:
      return std::sqrt(s.d_out / s.d_in);
  }
  throw ConfigError("unsupported rule");
}

double eps_formula(Rule rule, const OptimizerConfig& opt, EpsMode mode, const Shape& s) {
  switch (rule) {
    case Rule::SGD:
      return 1.0;
    case Rule::Adam:
      return 1.0 / (s.depth * s.d_out);
    case Rule::Shampoo:
      if (mode == EpsMode::relative) return 1.0;
      return s.d_in / (s.depth * s.depth * s.d_out * s.n_blk);
    case Rule::SOAP:
      return std::pow(s.b_out, opt.e_left / 2.0) * std::pow(s.b_in, opt.e_right / 2.0) / (s.depth * s.d_out);
    case Rule::Muon:
      return std::sqrt(s.d_in / s.d_out) / s.depth;
    case Rule::AdaMuon:
      return 1.0 / std::sqrt(s.d_in * s.d_out);
  }
  throw ConfigError("unsupported rule");
}

void check_pair(const OptimizerConfig& opt, const ScalingPlan& plan) {
  if (is_alt_muon(plan.param) && (opt.rule != Rule::Muon || opt.graft_rule))
    throw ConfigError("parameterization " + to_string(plan.param) + " requires ungrafted Muon");
  if (plan.param == Param::spectral_norm && opt.normalize == Normalize::none)
    throw ConfigError("spectral_norm parameterization requires a normalized update");
}

}  // namespace

std::string to_string(Role r) {
  switch (r) {
    case Role::embedding: return "embedding";
    case Role::hidden: return "hidden";
    case Role::readout: return "readout";
    case Role::bias: return "bias";
  }
  return "?";
}

std::string to_string(Param p) {
  switch (p) {
    case Param::SP: return "SP";
    case Param::muP: return "muP";
    case Param::spectral_norm: return "spectral_norm";
    case Param::muon_kimi_theta1: return "muon_kimi_theta1";
    case Param::muon_kimi_adamexp: return "muon_kimi_adamexp";
    case Param::muon_adamexp: return "muon_adamexp";
  }
  return "?";
}

std::string to_string(WdMode m) { return m == WdMode::constant ? "constant" : "inv_width"; }

Role parse_role(const std::string& s) {
  const std::string k = lower(s);
  if (k == "embedding") return Role::embedding;
  if (k == "hidden") return Role::hidden;
  if (k == "readout") return Role::readout;
  if (k == "bias") return Role::bias;
  throw ConfigError("unknown layer role '" + s + "'");
}

Param parse_param(const std::string& s) {
  const std::string k = lower(s);
  if (k == "sp") return Param::SP;
  if (k == "mup") return Param::muP;
  if (k == "spectral_norm") return Param::spectral_norm;
  if (k == "muon_kimi_theta1") return Param::muon_kimi_theta1;
  if (k == "muon_kimi_adamexp") return Param::muon_kimi_adamexp;
  if (k == "muon_adamexp") return Param::muon_adamexp;
  throw ConfigError("unknown parameterization '" + s + "'");
}

WdMode parse_wd_mode(const std::string& s) {
  const std::string k = lower(s);
  if (k == "constant") return WdMode::constant;
  if (k == "inv_width") return WdMode::inv_width;
  throw ConfigError("unknown weight decay mode '" + s + "'");
}

std::size_t LayerSpec::n_in() const { return b_in ? (d_in + *b_in - 1) / *b_in : 1; }
std::size_t LayerSpec::n_out() const { return b_out ? (d_out + *b_out - 1) / *b_out : 1; }

LayerSpec make_layer(std::string name, Role role, std::size_t d_in, std::size_t d_out, std::size_t width) {
  LayerSpec s;
  s.name = std::move(name);
  s.role = role;
  s.d_in = d_in;
  s.d_out = d_out;
  s.width = width;
  s.fan_in_scales = role == Role::hidden || role == Role::readout;
  s.fan_out_scales = role != Role::readout;
  return s;
}

void validate(const LayerSpec& spec) {
  if (spec.d_in == 0 || spec.d_out == 0) throw ConfigError("layer '" + spec.name + "': dims must be positive");
  if (spec.width == 0 || spec.depth_L == 0) throw ConfigError("layer '" + spec.name + "': width/depth must be positive");
  if (spec.role == Role::bias && spec.d_in != 1) throw ConfigError("bias layer '" + spec.name + "' must have d_in = 1");
  if ((spec.b_in && *spec.b_in == 0) || (spec.b_out && *spec.b_out == 0))
    throw ConfigError("layer '" + spec.name + "': block sizes must be positive");
}

bool is_alt_muon(Param p) {
  return p == Param::muon_kimi_theta1 || p == Param::muon_kimi_adamexp || p == Param::muon_adamexp;
}

void validate(const ScalingPlan& plan) {
  if (plan.base_width == 0 || plan.base_depth == 0) throw ConfigError("base width/depth must be positive");
  if (!(plan.eta_base > 0.0) || !std::isfinite(plan.eta_base)) throw ConfigError("eta_base must be positive");
  if (!(plan.wd_base >= 0.0)) throw ConfigError("wd_base must be nonnegative");
  if (plan.alpha_depth != 0.0 && plan.alpha_depth != 1.0) throw ConfigError("alpha_depth must be 0 or 1");
  if (!(plan.init_c >= 0.0)) throw ConfigError("init_c must be nonnegative");
}

double effective_alpha(const ScalingPlan& plan) { return plan.param == Param::SP ? 0.0 : plan.alpha_depth; }

double lr_multiplier(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan) {
  check_pair(opt, plan);
  if (plan.param == Param::SP) return 1.0;
  if (is_alt_muon(plan.param)) return alt_muon_multiplier(spec, plan.param, plan);
  if (opt.normalize != Normalize::none) return 1.0;
  const Rule rule = spec.role == Role::bias ? Rule::Adam : opt.graft_rule.value_or(opt.rule);
  return lr_formula(rule, opt, actual(spec, opt)) / lr_formula(rule, opt, base(spec, opt, plan));
}

double eps_scale(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan) {
  check_pair(opt, plan);
  if (plan.param == Param::SP) return 1.0;
  const Rule rule = spec.role == Role::bias ? Rule::Adam : opt.rule;
  const EpsMode mode = spec.role == Role::bias ? EpsMode::absolute : opt.eps_mode;
  return eps_formula(rule, opt, mode, actual(spec, opt)) / eps_formula(rule, opt, mode, base(spec, opt, plan));
}

double reference_eps_scale(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan) {
  check_pair(opt, plan);
  if (plan.param == Param::SP || !opt.graft_rule) return 1.0;
  const Rule rule = *opt.graft_rule;
  return eps_formula(rule, opt, EpsMode::absolute, actual(spec, opt)) /
         eps_formula(rule, opt, EpsMode::absolute, base(spec, opt, plan));
}

double graft_eps_scale(const LayerSpec& spec, const OptimizerConfig& opt, const ScalingPlan& plan) {
  check_pair(opt, plan);
  if (plan.param == Param::SP || !opt.graft_rule) return 1.0;
  auto f = [&](const Shape& s) { return std::sqrt(s.d_out / s.d_in) / lr_formula(opt.rule, opt, s); };
  return f(actual(spec, opt)) / f(base(spec, opt, plan));
}

double init_sigma(const LayerSpec& spec, const ScalingPlan& plan) {
  switch (spec.role) {
    case Role::hidden:
      return plan.init_c / std::sqrt(static_cast<double>(spec.d_in));
    case Role::embedding:
      return 0.1;
    case Role::readout:
    case Role::bias:
      return 0.0;
  }
  return 0.0;
}

double residual_multiplier(std::size_t depth, double alpha) {
  if (depth == 0) throw ConfigError("depth must be positive");
  return std::pow(static_cast<double>(depth), -alpha);
}

double wd_scale(std::size_t width, std::size_t base_width, WdMode mode) {
  if (width == 0 || base_width == 0) throw ConfigError("width must be positive");
  return mode == WdMode::constant ? 1.0 : static_cast<double>(base_width) / static_cast<double>(width);
}

double alt_muon_multiplier(const LayerSpec& spec, Param variant, const ScalingPlan& plan) {
  const OptimizerConfig none;
  const Shape a = actual(spec, none);
  const Shape b = base(spec, none, plan);
  const double gamma = std::sqrt(std::max(a.d_in, a.d_out) / std::max(b.d_in, b.d_out));
  const double adam = b.d_in / a.d_in;
  switch (variant) {
    case Param::muon_kimi_theta1: return gamma;
    case Param::muon_kimi_adamexp: return gamma * adam;
    case Param::muon_adamexp: return adam;
    default: throw ConfigError("not an alternative Muon parameterization: " + to_string(variant));
  }
}

PlanTable build_plan(const ModelManifest& manifest, const OptimizerConfig& opt, const ScalingPlan& plan) {
  validate(plan);
  validate(opt);
  PlanTable out;
  out.reserve(manifest.layers.size());
  const double alpha = effective_alpha(plan);
  const double wd = plan.wd_base * wd_scale(manifest.width, plan.base_width, plan.wd_mode);
  for (const LayerSpec& spec : manifest.layers) {
    validate(spec);
    for (const NamedHyper& prev : out)
      if (prev.name == spec.name) throw ConfigError("duplicate layer name '" + spec.name + "'");
    LayerHyper h;
    h.eta = plan.eta_base * lr_multiplier(spec, opt, plan);
    const double eps_base = spec.role == Role::bias ? 1e-8 : opt.eps;
    h.eps = eps_base * eps_scale(spec, opt, plan);
    h.sigma_init = init_sigma(spec, plan);
    h.residual_mult = spec.in_residual ? residual_multiplier(spec.depth_L, alpha) : 1.0;
    h.lambda_wd = wd;
    out.push_back({spec.name, h});
  }
  return out;
}

}  // namespace mupre
