#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mupre/harness.hpp"

namespace mupre {

void validate(const SweepConfig& cfg) {
  if (cfg.widths.empty()) throw ConfigError("widths must be nonempty");
  if (cfg.depths.empty()) throw ConfigError("depths must be nonempty");
  if (cfg.seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (cfg.probe_steps.empty()) throw ConfigError("probe_steps must be nonempty");
  for (std::size_t w : cfg.widths)
    if (w == 0) throw ConfigError("widths must be positive");
  for (std::size_t d : cfg.depths)
    if (d == 0) throw ConfigError("depths must be positive");
  if (!std::is_sorted(cfg.widths.begin(), cfg.widths.end()) ||
      std::adjacent_find(cfg.widths.begin(), cfg.widths.end()) != cfg.widths.end())
    throw ConfigError("widths must be strictly ascending");
  if (cfg.steps == 0) throw ConfigError("steps must be positive");
  if (cfg.batch_size == 0 || cfg.probe_size == 0) throw ConfigError("batch_size and probe_size must be positive");
  for (std::size_t p : cfg.probe_steps)
    if (p == 0 || p > cfg.steps) throw ConfigError("probe steps must lie in [1, steps]");
  for (double eta : cfg.lr_grid)
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("lr_grid entries must be positive");
  if (cfg.max_abs_slope && !(*cfg.max_abs_slope >= 0.0)) throw ConfigError("max_abs_slope must be nonnegative");
  validate(cfg.opt);
  validate(cfg.plan);
}

const SlopeRow* CoordCheckResult::find(std::size_t probe_step, const std::string& layer) const {
  for (const SlopeRow& r : slopes)
    if (r.probe_step == probe_step && r.layer == layer) return &r;
  return nullptr;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

RunSpec base_spec(const SweepConfig& cfg, std::size_t width, std::size_t depth, unsigned long long seed) {
  RunSpec s;
  s.arch = cfg.arch;
  s.width = width;
  s.depth = depth;
  s.activation = cfg.activation;
  s.opt = cfg.opt;
  s.plan = cfg.plan;
  s.wd_mode = cfg.wd_mode;
  s.steps = cfg.steps;
  s.batch_size = cfg.batch_size;
  s.probe_size = cfg.probe_size;
  s.probe_steps = cfg.probe_steps;
  s.zero_init_blocks = cfg.zero_init_blocks;
  s.overrides = cfg.overrides;
  s.seed = seed;
  s.run_id = cfg.name + "_w" + std::to_string(width) + "_d" + std::to_string(depth) + "_s" + std::to_string(seed);
  return s;
}

// Layer aliases usable across depths: "embed", "last_block", "readout".
std::string resolve_layer(const RunResult& run, const std::string& name) {
  if (run.layers.empty()) return name;
  if (name == "embed") return run.layers.front();
  if (name == "readout") return run.layers.back();
  if (name == "last_block") return run.layers.size() >= 3 ? run.layers[run.layers.size() - 2] : run.layers.back();
  return name;
}

struct Axis {
  std::vector<std::size_t> values;
  std::size_t (*key)(const RunSpec&);
};

CoordCheckResult slope_study(const SweepConfig& cfg, const std::vector<RunSpec>& specs, const Axis& axis,
                             const std::vector<std::string>& default_layers, double default_abs) {
  CoordCheckResult res;
  res.runs = run_all(specs, cfg.jobs);
  for (const RunResult& r : res.runs)
    if (r.diverged) res.excluded.push_back(r.spec.run_id);

  const std::vector<std::string> layers = cfg.check_layers.empty() ? default_layers : cfg.check_layers;
  std::vector<std::size_t> steps = cfg.probe_steps;
  std::sort(steps.begin(), steps.end());
  for (std::size_t step : steps)
    for (const std::string& layer : layers) {
      SlopeRow row;
      row.probe_step = step;
      row.layer = layer;
      for (std::size_t v : axis.values) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const RunResult& r : res.runs) {
          if (r.diverged || axis.key(r.spec) != v) continue;
          const auto dh = r.delta_h(step, resolve_layer(r, layer));
          if (dh && *dh > 0.0 && std::isfinite(*dh)) {
            sum += *dh;
            ++count;
          }
        }
        if (count == 0) continue;
        row.xs.push_back(static_cast<double>(v));
        row.values.push_back(sum / static_cast<double>(count));
      }
      if (row.xs.size() >= 2) {
        row.fit = exponent_fit(row.xs, row.values);
      } else {
        row.fit.slope = row.fit.r2 = std::numeric_limits<double>::quiet_NaN();
      }
      res.slopes.push_back(std::move(row));
    }

  std::optional<double> max_abs = cfg.max_abs_slope, min_slope = cfg.min_slope;
  if (!max_abs && !min_slope) {
    if (cfg.plan.param == Param::SP)
      min_slope = 0.4;
    else
      max_abs = default_abs;
  }
  const std::size_t first = steps.front();
  double worst_abs = 0.0, best = -std::numeric_limits<double>::infinity();
  bool missing = false;
  for (const SlopeRow& r : res.slopes) {
    if (r.probe_step != first) continue;
    if (std::isnan(r.fit.slope)) {
      missing = true;
      continue;
    }
    worst_abs = std::max(worst_abs, std::abs(r.fit.slope));
    best = std::max(best, r.fit.slope);
  }
  res.check.evaluated = true;
  std::string detail = "step " + std::to_string(first) + ":";
  bool ok = !missing;
  if (missing) detail += " insufficient data for some layers;";
  if (max_abs) {
    ok = ok && worst_abs <= *max_abs;
    detail += " max|slope| " + fmt(worst_abs) + " (limit " + fmt(*max_abs) + ")";
  }
  if (min_slope) {
    ok = ok && best >= *min_slope;
    detail += " max slope " + fmt(best) + " (min " + fmt(*min_slope) + ")";
  }
  res.check.passed = ok;
  res.check.detail = detail;
  return res;
}

std::vector<std::string> layer_names(const SweepConfig& cfg) {
  RunSpec s = base_spec(cfg, cfg.widths.front(), cfg.depths.front(), 0);
  const PlanTable t = plan_for(s);
  std::vector<std::string> out;
  for (const NamedHyper& h : t) out.push_back(h.name);
  return out;
}

}  // namespace

CoordCheckResult coord_check(const SweepConfig& cfg) {
  validate(cfg);
  if (cfg.widths.size() < 3) throw ConfigError("coord_check needs at least three widths");
  std::vector<RunSpec> specs;
  for (std::size_t w : cfg.widths)
    for (auto seed : cfg.seeds) specs.push_back(base_spec(cfg, w, cfg.depths.front(), seed));
  return slope_study(cfg, specs, {cfg.widths, [](const RunSpec& s) { return s.width; }}, layer_names(cfg), 0.15);
}

CoordCheckResult depth_check(const SweepConfig& cfg) {
  validate(cfg);
  if (cfg.depths.size() < 3) throw ConfigError("depth_check needs at least three depths");
  std::vector<RunSpec> specs;
  for (std::size_t d : cfg.depths)
    for (auto seed : cfg.seeds) specs.push_back(base_spec(cfg, cfg.widths.front(), d, seed));
  return slope_study(cfg, specs, {cfg.depths, [](const RunSpec& s) { return s.depth; }}, {"last_block"}, 0.2);
}

LrSweepResult lr_sweep(const SweepConfig& cfg) {
  validate(cfg);
  if (cfg.lr_grid.empty()) throw ConfigError("lr_grid must be nonempty");
  std::vector<RunSpec> specs;
  for (std::size_t w : cfg.widths)
    for (double eta : cfg.lr_grid)
      for (auto seed : cfg.seeds) {
        RunSpec s = base_spec(cfg, w, cfg.depths.front(), seed);
        s.plan.eta_base = eta;
        s.run_id += "_lr" + format_number(eta);
        specs.push_back(std::move(s));
      }
  LrSweepResult res;
  res.runs = run_all(specs, cfg.jobs);

  std::size_t k = 0;
  for (std::size_t w : cfg.widths) {
    SweepCell best{w, 0.0, std::numeric_limits<double>::infinity(), true};
    for (double eta : cfg.lr_grid) {
      SweepCell cell{w, eta, 0.0, false};
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s, ++k) {
        const RunResult& r = res.runs[k];
        cell.diverged = cell.diverged || r.diverged;
        cell.loss += r.final_loss;
      }
      cell.loss = cell.diverged ? std::numeric_limits<double>::infinity() : cell.loss / cfg.seeds.size();
      if (cell.loss < best.loss) best = cell;
      res.cells.push_back(cell);
    }
    if (std::isfinite(best.loss)) res.argmin.emplace_back(w, best.eta_base);
  }

  res.check.evaluated = cfg.max_drift_octaves.has_value() || cfg.min_drift_octaves.has_value();
  const bool complete = res.argmin.size() == cfg.widths.size();
  if (complete && res.argmin.size() >= 2) {
    res.drift_octaves = std::log2(res.argmin.back().second / res.argmin.front().second);
  } else {
    res.drift_octaves = std::numeric_limits<double>::quiet_NaN();
  }
  std::string detail = "drift " + fmt(res.drift_octaves) + " octaves";
  bool ok = std::isfinite(res.drift_octaves);
  if (!complete) detail += "; some widths diverged at every lr";
  if (cfg.max_drift_octaves) {
    ok = ok && std::abs(res.drift_octaves) <= *cfg.max_drift_octaves;
    detail += " (max " + fmt(*cfg.max_drift_octaves) + ")";
  }
  if (cfg.min_drift_octaves) {
    ok = ok && std::abs(res.drift_octaves) >= *cfg.min_drift_octaves;
    detail += " (min " + fmt(*cfg.min_drift_octaves) + ")";
  }
  res.check.passed = !res.check.evaluated || ok;
  res.check.detail = detail;
  return res;
}

namespace {

// Update rules whose output rank never exceeds that of the gradient history.
bool rank_preserving(const OptimizerConfig& opt) {
  switch (opt.rule) {
    case Rule::SGD:
    case Rule::Shampoo:
    case Rule::Muon:
      return true;
    case Rule::SOAP:
      return opt.e_left != 0.0 && opt.e_right != 0.0;
    default:
      return false;
  }
}

}  // namespace

RankScanResult rank_scan(const SweepConfig& cfg) {
  validate(cfg);
  std::vector<RunSpec> specs;
  for (std::size_t w : cfg.widths)
    for (auto seed : cfg.seeds) {
      RunSpec s = base_spec(cfg, w, cfg.depths.front(), seed);
      s.record_every_step = true;
      specs.push_back(std::move(s));
    }
  RankScanResult res;
  res.runs = run_all(specs, cfg.jobs);

  for (const RunResult& run : res.runs) {
    const ModelManifest man = build_model(run.spec)->manifest();
    for (std::size_t k = 0; k < man.layers.size(); ++k) {
      const LayerSpec& l = man.layers[k];
      const double dim = static_cast<double>(std::min(l.d_in, l.d_out));
      for (const MetricRecord& r : run.records) {
        if (r.layer != l.name || std::isnan(r.srank)) continue;
        const double bound = std::min(dim, static_cast<double>(r.step * run.spec.batch_size));
        if (r.srank > bound * (1.0 + 1e-6)) res.bound_respected = false;
      }
    }
  }

  const std::vector<std::string> layers = cfg.check_layers.empty() ? layer_names(cfg) : cfg.check_layers;
  std::vector<std::size_t> steps = cfg.probe_steps;
  std::sort(steps.begin(), steps.end());
  for (std::size_t w : cfg.widths)
    for (const std::string& layer : layers) {
      RankScanRow row{w, layer, 0.0, 0.0};
      std::size_t n = 0;
      for (const RunResult& run : res.runs) {
        if (run.spec.width != w || run.diverged) continue;
        const std::string name = resolve_layer(run, layer);
        double first = std::numeric_limits<double>::quiet_NaN(), last = first;
        for (const MetricRecord& r : run.records) {
          if (r.layer != name) continue;
          if (r.step == steps.front()) first = r.srank;
          if (r.step == steps.back()) last = r.srank;
        }
        row.srank_first += first;
        row.srank_last += last;
        ++n;
      }
      if (n == 0) {
        row.srank_first = row.srank_last = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.srank_first /= static_cast<double>(n);
        row.srank_last /= static_cast<double>(n);
      }
      res.summary.push_back(row);
    }

  res.check.evaluated = rank_preserving(cfg.opt);
  res.check.passed = !res.check.evaluated || res.bound_respected;
  res.check.detail = res.check.evaluated
                         ? std::string(res.bound_respected ? "srank within min(D, tB)" : "srank exceeds min(D, tB)")
                         : "rank bound not applicable to " + to_string(cfg.opt.rule);
  return res;
}

}  // namespace mupre
