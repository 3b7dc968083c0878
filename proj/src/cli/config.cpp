#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mupre/cli.hpp"

namespace mupre {

using json = nlohmann::json;

// ---- key-path line scanner ----

namespace {

class LineScanner {
 public:
  explicit LineScanner(const std::string& text) : s_(text) {}

  std::map<std::string, int> run() {
    skip_ws();
    if (i_ < s_.size()) value("");
    return std::move(lines_);
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string string_token() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        out += s_[i_ + 1];
        i_ += 2;
        continue;
      }
      out += s_[i_++];
    }
    ++i_;
    return out;
  }

  void value(const std::string& path) {
    skip_ws();
    if (i_ >= s_.size()) return;
    lines_.emplace(path.empty() ? "$" : path, line_);
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      for (;;) {
        skip_ws();
        if (i_ >= s_.size() || s_[i_] == '}') break;
        if (s_[i_] == ',') {
          ++i_;
          continue;
        }
        if (s_[i_] != '"') return;  // malformed; the JSON parser reports it
        const int key_line = line_;
        const std::string key = string_token();
        const std::string child = path.empty() ? key : path + "." + key;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ':') ++i_;
        value(child);
        lines_[child] = key_line;
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      std::size_t k = 0;
      for (;;) {
        skip_ws();
        if (i_ >= s_.size() || s_[i_] == ']') break;
        if (s_[i_] == ',') {
          ++i_;
          continue;
        }
        value(path + "[" + std::to_string(k++) + "]");
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != ',' &&
             s_[i_] != '}' && s_[i_] != ']')
        ++i_;
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

}  // namespace

std::map<std::string, int> json_value_lines(const std::string& text) { return LineScanner(text).run(); }

// ---- schema ----

namespace {

class Reader {
 public:
  Reader(const std::string& text, std::string source) : source_(std::move(source)), lines_(json_value_lines(text)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    int line = 1;
    for (std::string p = path; !p.empty();) {
      auto it = lines_.find(p);
      if (it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto cut = p.find_last_of(".[");
      p = cut == std::string::npos ? "" : p.substr(0, cut);
    }
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + (path.empty() ? "$" : path) + ": " + msg);
  }

  void only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) fail(join(path, it.key()), "unknown key");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  std::size_t positive(const json& v, const std::string& path) const {
    if (!v.is_number_integer() || v.get<long long>() <= 0) fail(path, "expected a positive integer");
    return v.get<std::size_t>();
  }

  unsigned long long nonneg(const json& v, const std::string& path) const {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "expected a nonnegative integer");
    return v.get<unsigned long long>();
  }

  std::string str(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::string& path) const {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  template <class T>
  T enum_value(const json& v, const std::string& path, T (*parse)(const std::string&)) const {
    const std::string s = str(v, path);
    try {
      return parse(s);
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }

  template <class F>
  auto array(const json& v, const std::string& path, F&& elem) const {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array");
    std::vector<decltype(elem(v[0], path))> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(elem(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
  }

  // Runs fn; library validation errors are attributed to `path`.
  template <class F>
  void guarded(const std::string& path, F&& fn) const {
    try {
      fn();
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
};

WeightDecayMode parse_wd_apply(const std::string& s) {
  if (s == "independent") return WeightDecayMode::independent;
  if (s == "coupled") return WeightDecayMode::coupled;
  throw ConfigError("unknown weight decay mode '" + s + "'");
}

void read_model(const Reader& r, const json& m, RunConfig& cfg) {
  r.only(m, "model", {"arch", "widths", "depths", "activation", "seed", "zero_init_blocks"});
  SweepConfig& s = cfg.sweep;
  if (m.contains("arch")) s.arch = r.enum_value(m["arch"], "model.arch", parse_arch);
  if (m.contains("widths"))
    s.widths = r.array(m["widths"], "model.widths", [&](const json& v, const std::string& p) { return r.positive(v, p); });
  if (m.contains("depths"))
    s.depths = r.array(m["depths"], "model.depths", [&](const json& v, const std::string& p) { return r.positive(v, p); });
  if (m.contains("activation")) s.activation = r.enum_value(m["activation"], "model.activation", parse_activation);
  if (m.contains("seed")) cfg.seed = r.nonneg(m["seed"], "model.seed");
  if (m.contains("zero_init_blocks")) s.zero_init_blocks = r.boolean(m["zero_init_blocks"], "model.zero_init_blocks");
}

void read_optimizer(const Reader& r, const json& o, RunConfig& cfg) {
  r.only(o, "optimizer",
         {"rule", "e_left", "e_right", "beta1", "beta2", "eps", "eps_mode", "graft_rule", "graft_eps", "graft_ref_eps",
          "block_in", "block_out", "block", "normalize", "precond_freq", "ns_iters", "ns_polish", "ns_eps", "rms_align",
          "weight_decay_mode"});
  if (!o.contains("rule")) r.fail("optimizer", "missing key 'rule'");
  OptimizerConfig c = default_config(r.enum_value(o["rule"], "optimizer.rule", parse_rule));
  auto num = [&](const char* k, double& dst) {
    if (o.contains(k)) dst = r.number(o[k], std::string("optimizer.") + k);
  };
  num("e_left", c.e_left);
  num("e_right", c.e_right);
  num("beta1", c.beta1);
  num("beta2", c.beta2);
  num("eps", c.eps);
  num("graft_eps", c.graft_eps);
  num("graft_ref_eps", c.graft_ref_eps);
  num("ns_eps", c.ns_eps);
  if (o.contains("eps_mode")) c.eps_mode = r.enum_value(o["eps_mode"], "optimizer.eps_mode", parse_eps_mode);
  if (o.contains("graft_rule") && !o["graft_rule"].is_null())
    c.graft_rule = r.enum_value(o["graft_rule"], "optimizer.graft_rule", parse_rule);
  auto block = [&](const char* k) -> std::optional<std::size_t> {
    if (!o.contains(k) || o[k].is_null()) return std::nullopt;
    return r.positive(o[k], std::string("optimizer.") + k);
  };
  if (auto b = block("block")) c.block_in = c.block_out = b;
  if (auto b = block("block_in")) c.block_in = b;
  if (auto b = block("block_out")) c.block_out = b;
  if (o.contains("normalize")) c.normalize = r.enum_value(o["normalize"], "optimizer.normalize", parse_normalize);
  if (o.contains("precond_freq")) c.precond_freq = static_cast<int>(r.positive(o["precond_freq"], "optimizer.precond_freq"));
  if (o.contains("ns_iters")) c.ns_iters = static_cast<int>(r.positive(o["ns_iters"], "optimizer.ns_iters"));
  if (o.contains("ns_polish")) c.ns_polish = static_cast<int>(r.nonneg(o["ns_polish"], "optimizer.ns_polish"));
  if (o.contains("rms_align")) c.rms_align = r.boolean(o["rms_align"], "optimizer.rms_align");
  if (o.contains("weight_decay_mode"))
    cfg.sweep.wd_mode = r.enum_value(o["weight_decay_mode"], "optimizer.weight_decay_mode", parse_wd_apply);
  r.guarded("optimizer", [&] { validate(c); });
  cfg.sweep.opt = c;
}

void read_scaling(const Reader& r, const json& sc, RunConfig& cfg) {
  r.only(sc, "scaling",
         {"param", "base_width", "base_depth", "eta_base", "wd_base", "wd_mode", "alpha_depth", "init_c", "overrides"});
  ScalingPlan& p = cfg.sweep.plan;
  if (sc.contains("param")) p.param = r.enum_value(sc["param"], "scaling.param", parse_param);
  if (sc.contains("base_width")) p.base_width = r.positive(sc["base_width"], "scaling.base_width");
  if (sc.contains("base_depth")) p.base_depth = r.positive(sc["base_depth"], "scaling.base_depth");
  if (sc.contains("eta_base")) p.eta_base = r.number(sc["eta_base"], "scaling.eta_base");
  if (sc.contains("wd_base")) p.wd_base = r.number(sc["wd_base"], "scaling.wd_base");
  if (sc.contains("wd_mode")) p.wd_mode = r.enum_value(sc["wd_mode"], "scaling.wd_mode", parse_wd_mode);
  if (sc.contains("alpha_depth")) p.alpha_depth = r.number(sc["alpha_depth"], "scaling.alpha_depth");
  if (sc.contains("init_c")) p.init_c = r.number(sc["init_c"], "scaling.init_c");
  if (sc.contains("overrides")) r.guarded("scaling.overrides", [&] { cfg.sweep.overrides = plan_from_json(sc["overrides"].dump()); });
  r.guarded("scaling", [&] { validate(p); });
}

void read_sweep(const Reader& r, const json& sw, RunConfig& cfg) {
  r.only(sw, "sweep",
         {"name", "steps", "batch_size", "probe_size", "lr_grid", "seeds", "probe_steps", "check_layers",
          "max_abs_slope", "min_slope", "max_drift_octaves", "min_drift_octaves", "jobs"});
  SweepConfig& s = cfg.sweep;
  if (sw.contains("name")) {
    s.name = r.str(sw["name"], "sweep.name");
    if (s.name.empty() || s.name.find_first_of("/\\, \n") != std::string::npos)
      r.fail("sweep.name", "name must be nonempty without separators or commas");
  }
  if (sw.contains("steps")) s.steps = r.positive(sw["steps"], "sweep.steps");
  if (sw.contains("batch_size")) s.batch_size = r.positive(sw["batch_size"], "sweep.batch_size");
  if (sw.contains("probe_size")) s.probe_size = r.positive(sw["probe_size"], "sweep.probe_size");
  if (sw.contains("lr_grid"))
    s.lr_grid = r.array(sw["lr_grid"], "sweep.lr_grid", [&](const json& v, const std::string& p) {
      const double x = r.number(v, p);
      if (!(x > 0.0)) r.fail(p, "learning rates must be positive");
      return x;
    });
  if (sw.contains("seeds"))
    s.seeds = r.array(sw["seeds"], "sweep.seeds", [&](const json& v, const std::string& p) { return r.nonneg(v, p); });
  if (sw.contains("probe_steps"))
    s.probe_steps =
        r.array(sw["probe_steps"], "sweep.probe_steps", [&](const json& v, const std::string& p) { return r.positive(v, p); });
  if (sw.contains("check_layers"))
    s.check_layers =
        r.array(sw["check_layers"], "sweep.check_layers", [&](const json& v, const std::string& p) { return r.str(v, p); });
  auto opt_num = [&](const char* k, std::optional<double>& dst) {
    if (sw.contains(k) && !sw[k].is_null()) dst = r.number(sw[k], std::string("sweep.") + k);
  };
  opt_num("max_abs_slope", s.max_abs_slope);
  opt_num("min_slope", s.min_slope);
  opt_num("max_drift_octaves", s.max_drift_octaves);
  opt_num("min_drift_octaves", s.min_drift_octaves);
  if (sw.contains("jobs")) s.jobs = static_cast<unsigned>(r.positive(sw["jobs"], "sweep.jobs"));
}

void read_output(const Reader& r, const json& o, RunConfig& cfg) {
  r.only(o, "output", {"dir", "formats"});
  if (o.contains("dir")) cfg.output.dir = r.str(o["dir"], "output.dir");
  if (o.contains("formats")) {
    cfg.output.csv = cfg.output.jsonl = false;
    const auto fs =
        r.array(o["formats"], "output.formats", [&](const json& v, const std::string& p) { return r.str(v, p); });
    for (std::size_t k = 0; k < fs.size(); ++k) {
      if (fs[k] == "csv")
        cfg.output.csv = true;
      else if (fs[k] == "jsonl")
        cfg.output.jsonl = true;
      else
        r.fail("output.formats[" + std::to_string(k) + "]", "format must be csv or jsonl");
    }
  }
}

void read_oracle(const Reader& r, const json& o, RunConfig& cfg) {
  r.only(o, "oracle", {"draws", "tolerance", "muon_tolerance", "gram_tolerance", "pinv_tolerance"});
  OracleSpec& s = cfg.oracle;
  if (o.contains("draws")) s.draws = static_cast<int>(r.positive(o["draws"], "oracle.draws"));
  auto tol = [&](const char* k, double& dst) {
    if (!o.contains(k)) return;
    dst = r.number(o[k], std::string("oracle.") + k);
    if (!(dst > 0.0)) r.fail(std::string("oracle.") + k, "tolerance must be positive");
  };
  tol("tolerance", s.tol.rank1);
  tol("muon_tolerance", s.tol.muon_polar);
  tol("gram_tolerance", s.tol.gram);
  tol("pinv_tolerance", s.tol.gram_pinv);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "at line L, column C"
    throw ConfigError(source + ": " + e.what());
  }
  const Reader r(text, source);
  r.only(doc, "", {"model", "optimizer", "scaling", "sweep", "output", "oracle"});
  RunConfig cfg;
  cfg.source = source;
  if (doc.contains("model")) read_model(r, doc["model"], cfg);
  if (doc.contains("optimizer")) read_optimizer(r, doc["optimizer"], cfg);
  if (doc.contains("scaling")) read_scaling(r, doc["scaling"], cfg);
  if (doc.contains("sweep")) read_sweep(r, doc["sweep"], cfg);
  if (doc.contains("output")) read_output(r, doc["output"], cfg);
  if (doc.contains("oracle")) read_oracle(r, doc["oracle"], cfg);
  r.guarded(doc.contains("sweep") ? "sweep" : "", [&] { validate(cfg.sweep); });
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

SweepConfig resolved_sweep(const RunConfig& cfg) {
  SweepConfig s = cfg.sweep;
  for (auto& seed : s.seeds) seed += cfg.seed;
  return s;
}

}  // namespace mupre
