#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mupre/harness.hpp"
#include "mupre/rng.hpp"

namespace mupre {

std::string to_string(Arch a) { return a == Arch::mlp ? "mlp" : "resmlp"; }

Arch parse_arch(const std::string& s) {
  if (s == "mlp") return Arch::mlp;
  if (s == "resmlp") return Arch::resmlp;
  throw ConfigError("unknown architecture '" + s + "'");
}

std::optional<double> RunResult::delta_h(std::size_t step, const std::string& layer) const {
  for (const MetricRecord& r : records)
    if (r.step == step && r.layer == layer) return r.delta_h_rms;
  return std::nullopt;
}

namespace {

std::vector<std::size_t> mlp_widths(const RunSpec& spec) {
  if (spec.depth < 2) throw ConfigError("an MLP needs depth >= 2 weight layers");
  std::vector<std::size_t> w(spec.depth + 1, spec.width);
  w.front() = w.back() = 1;
  return w;
}

ModelManifest manifest_for(const RunSpec& spec) {
  if (spec.width == 0) throw ConfigError("width must be positive");
  if (spec.depth == 0) throw ConfigError("depth must be positive");
  return spec.arch == Arch::mlp ? mlp_manifest(mlp_widths(spec)) : resmlp_manifest(spec.width, spec.depth);
}

bool is_record_step(const RunSpec& spec, std::size_t t) {
  return spec.record_every_step || std::find(spec.probe_steps.begin(), spec.probe_steps.end(), t) != spec.probe_steps.end();
}

}  // namespace

PlanTable plan_for(const RunSpec& spec) {
  PlanTable table = build_plan(manifest_for(spec), spec.opt, spec.plan);
  for (const NamedHyper& o : spec.overrides)
    for (NamedHyper& h : table)
      if (h.name == o.name) h.hyper = o.hyper;
  return table;
}

std::unique_ptr<Model> build_model(const RunSpec& spec) {
  const PlanTable table = plan_for(spec);
  std::unique_ptr<Model> model;
  if (spec.arch == Arch::mlp) {
    model = std::make_unique<MlpModel>(mlp_widths(spec), spec.activation);
  } else {
    // Every block shares the plan's residual multiplier.
    model = std::make_unique<ResMlpModel>(spec.width, spec.depth, table[1].hyper.residual_mult, spec.activation);
  }
  std::vector<double> sigma;
  const auto& layers = model->manifest().layers;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const bool block = spec.arch == Arch::resmlp && layers[k].in_residual;
    sigma.push_back(block && spec.zero_init_blocks ? 0.0 : table[k].hyper.sigma_init);
  }
  model->initialize(sigma, derive_seed(spec.seed, 4));
  return model;
}

RunResult run_training(const RunSpec& spec) {
  if (spec.steps == 0) throw ConfigError("steps must be positive");
  if (spec.batch_size == 0 || spec.probe_size == 0) throw ConfigError("batch and probe sizes must be positive");
  validate(spec.opt);

  RunResult res;
  res.spec = spec;
  const PlanTable table = plan_for(spec);
  std::unique_ptr<Model> model = build_model(spec);
  const auto& layers = model->manifest().layers;
  const std::size_t n = layers.size();
  for (const LayerSpec& l : layers) res.layers.push_back(l.name);

  std::vector<OptimizerConfig> cfgs;
  std::vector<OptimizerState> states;
  for (std::size_t k = 0; k < n; ++k) {
    OptimizerConfig c = spec.opt;
    c.eps = table[k].hyper.eps;
    c.graft_ref_eps = spec.opt.graft_ref_eps * reference_eps_scale(layers[k], spec.opt, spec.plan);
    c.graft_eps = spec.opt.graft_eps * graft_eps_scale(layers[k], spec.opt, spec.plan);
    states.push_back(make_state(layers[k].d_in, c, derive_seed(spec.seed, 5, k)));
    cfgs.push_back(c);
  }

  const MlpModel teacher = make_teacher(derive_seed(spec.seed, 1));
  const Batch probe = synth_batch(derive_seed(spec.seed, 3), spec.probe_size, teacher);

  for (std::size_t t = 1; t <= spec.steps; ++t) {
    const Batch batch = synth_batch(derive_seed(spec.seed, 2, t), spec.batch_size, teacher);
    auto [loss, cache] = model->forward(batch);
    if (t == 1) res.initial_loss = loss;
    if (!std::isfinite(loss) || loss > 1e4 * res.initial_loss) {
      res.diverged = true;
      res.diverged_at = t;
      break;
    }
    const std::vector<Matrix> grads = model->backward(cache);
    const bool record = is_record_step(spec, t);
    Cache before;
    if (record) before = model->forward(probe).second;

    std::vector<UpdateReport> reps;
    for (std::size_t k = 0; k < n; ++k) {
      cfgs[k].measure_spectrum = record;
      UpdateReport rep = step(states[k], grads[k], cfgs[k]);
      const LayerHyper& h = table[k].hyper;
      Matrix& w = model->weights()[k];
      w = apply_weight_decay(w, h.lambda_wd, spec.wd_mode, h.eta) - h.eta * rep.update;
      if (record) reps.push_back(std::move(rep));
    }

    if (record) {
      const Cache after = model->forward(probe).second;
      for (std::size_t k = 0; k < n; ++k) {
        MetricRecord r;
        r.run_id = spec.run_id;
        r.width = spec.width;
        r.depth = spec.depth;
        r.step = t;
        r.eta_base = spec.plan.eta_base;
        r.loss = loss;
        r.layer = layers[k].name;
        r.delta_h_rms = coord_probe(before, after, k);
        r.srank = reps[k].srank;
        r.spec_norm = table[k].hyper.eta * reps[k].spec;
        res.records.push_back(std::move(r));
      }
    }
  }

  res.final_loss = std::numeric_limits<double>::infinity();
  if (!res.diverged) {
    const double probe_loss = model->forward(probe).first;
    if (std::isfinite(probe_loss)) {
      res.final_loss = probe_loss;
    } else {
      res.diverged = true;
      res.diverged_at = spec.steps;
    }
  }
  return res;
}

std::vector<RunResult> run_all(const std::vector<RunSpec>& specs, unsigned jobs) {
  std::vector<RunResult> out(specs.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) out[i] = run_training(specs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(specs.size());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < specs.size(); i = next++) {
        try {
          out[i] = run_training(specs[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mupre
