#include <algorithm>
#include <cctype>
#include <cmath>

#include "mupre/optim.hpp"

namespace mupre {

namespace {
std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}
}  // namespace

std::string to_string(Rule r) {
  switch (r) {
    case Rule::SGD: return "SGD";
    case Rule::Adam: return "Adam";
    case Rule::Shampoo: return "Shampoo";
    case Rule::SOAP: return "SOAP";
    case Rule::Muon: return "Muon";
    case Rule::AdaMuon: return "AdaMuon";
  }
  return "?";
}

std::string to_string(Normalize n) {
  switch (n) {
    case Normalize::none: return "none";
    case Normalize::spectral: return "spectral";
    case Normalize::rms: return "rms";
  }
  return "?";
}

std::string to_string(EpsMode m) { return m == EpsMode::absolute ? "absolute" : "relative"; }

Rule parse_rule(const std::string& s) {
  const std::string k = lower(s);
  if (k == "sgd") return Rule::SGD;
  if (k == "adam") return Rule::Adam;
  if (k == "shampoo") return Rule::Shampoo;
  if (k == "soap") return Rule::SOAP;
  if (k == "muon") return Rule::Muon;
  if (k == "adamuon") return Rule::AdaMuon;
  throw ConfigError("unknown optimizer rule '" + s + "'");
}

Normalize parse_normalize(const std::string& s) {
  const std::string k = lower(s);
  if (k == "none") return Normalize::none;
  if (k == "spectral") return Normalize::spectral;
  if (k == "rms") return Normalize::rms;
  throw ConfigError("unknown normalize mode '" + s + "'");
}

EpsMode parse_eps_mode(const std::string& s) {
  const std::string k = lower(s);
  if (k == "absolute") return EpsMode::absolute;
  if (k == "relative") return EpsMode::relative;
  throw ConfigError("unknown eps mode '" + s + "'");
}

OptimizerConfig default_config(Rule rule) {
  OptimizerConfig c;
  c.rule = rule;
  switch (rule) {
    case Rule::Shampoo:
      c.eps = 1e-5;
      c.eps_mode = EpsMode::relative;
      break;
    case Rule::SOAP:
      c.e_left = c.e_right = 1.0;
      break;
    case Rule::SGD:
    case Rule::Muon:
      c.e_left = c.e_right = 0.0;
      break;
    default:
      break;
  }
  return c;
}

bool uses_blocks(const OptimizerConfig& cfg) { return cfg.block_in.has_value() || cfg.block_out.has_value(); }

void validate(const OptimizerConfig& cfg) {
  auto in_unit = [](double b) { return b >= 0.0 && b < 1.0; };
  if (!in_unit(cfg.beta1) || !in_unit(cfg.beta2)) throw ConfigError("betas must lie in [0, 1)");
  if (!(cfg.eps >= 0.0) || !(cfg.graft_eps >= 0.0) || !(cfg.graft_ref_eps >= 0.0) || !(cfg.ns_eps >= 0.0))
    throw ConfigError("eps values must be nonnegative");
  if (!(cfg.e_left >= 0.0) || !(cfg.e_right >= 0.0)) throw ConfigError("exponents must be nonnegative");
  if (cfg.rule == Rule::SOAP) {
    auto flag = [](double e) { return e == 0.0 || e == 1.0; };
    if (!flag(cfg.e_left) || !flag(cfg.e_right)) throw ConfigError("SOAP side indicators must be 0 or 1");
  }
  if (uses_blocks(cfg) && cfg.rule != Rule::Shampoo && cfg.rule != Rule::SOAP)
    throw ConfigError("blocking requires Shampoo or SOAP");
  if ((cfg.block_in && *cfg.block_in == 0) || (cfg.block_out && *cfg.block_out == 0))
    throw ConfigError("block sizes must be positive");
  if (cfg.eps_mode == EpsMode::relative && cfg.rule != Rule::Shampoo)
    throw ConfigError("relative eps is only defined for Shampoo");
  if (cfg.precond_freq < 1) throw ConfigError("precond_freq must be >= 1");
  if (cfg.ns_iters < 1 || cfg.ns_polish < 0) throw ConfigError("Newton-Schulz iteration counts out of range");
  if (cfg.graft_rule && (*cfg.graft_rule == Rule::Shampoo || *cfg.graft_rule == Rule::SOAP))
    throw ConfigError("graft reference must be a first-order rule or Muon");
}

}  // namespace mupre
