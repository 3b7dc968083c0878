#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mupre/cli.hpp"

namespace mupre {

namespace {

struct Flags {
  std::string config;
  std::string out_dir;
  std::optional<unsigned long long> seed;
  std::optional<unsigned> jobs;
  std::string format;  // empty: whatever the config asks for
  std::string baseline, candidate;
};

RunConfig configured(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.sweep.jobs = *f.jobs;
  if (!f.out_dir.empty()) cfg.output.dir = f.out_dir;
  if (const char* env = std::getenv("MUPRE_OUT"); env && *env) cfg.output.dir = env;
  if (f.format == "csv") {
    cfg.output.csv = true;
    cfg.output.jsonl = false;
  } else if (f.format == "jsonl") {
    cfg.output.csv = false;
    cfg.output.jsonl = true;
  }
  return cfg;
}

std::string artifact(const RunConfig& cfg, const std::string& cmd, const std::string& ext) {
  return (std::filesystem::path(cfg.output.dir) / (cfg.sweep.name + "_" + cmd + "." + ext)).string();
}

void write_artifacts(const RunConfig& cfg, const std::string& cmd, const std::vector<RunResult>& runs,
                     const std::string& jsonl, std::ostream& out) {
  if (cfg.output.dir.empty()) return;
  std::filesystem::create_directories(cfg.output.dir);
  if (cfg.output.csv) {
    const std::string p = artifact(cfg, cmd, "csv");
    write_file_atomic(p, records_to_csv(collect_records(runs)));
    out << "wrote " << p << "\n";
  }
  if (cfg.output.jsonl) {
    const std::string p = artifact(cfg, cmd, "jsonl");
    write_file_atomic(p, jsonl);
    out << "wrote " << p << "\n";
  }
}

int report_check(const CheckOutcome& c, std::ostream& out) {
  if (!c.evaluated) {
    out << "check: none configured\n";
    return 0;
  }
  out << "check: " << (c.passed ? "PASS" : "FAIL") << " " << c.detail << "\n";
  return c.passed ? 0 : 1;
}

void print_slopes(const CoordCheckResult& r, std::ostream& out) {
  for (const SlopeRow& s : r.slopes)
    out << "step " << s.probe_step << " " << std::left << std::setw(14) << s.layer << std::right
        << " slope " << format_number(s.fit.slope) << " r2 " << format_number(s.fit.r2) << "\n";
  for (const std::string& id : r.excluded) out << "excluded (diverged): " << id << "\n";
}

int cmd_plan(const Flags& f, std::ostream& out) {
  const RunConfig cfg = configured(f);
  const SweepConfig s = resolved_sweep(cfg);
  RunSpec spec;
  spec.arch = s.arch;
  spec.width = s.widths.front();
  spec.depth = s.depths.front();
  spec.opt = s.opt;
  spec.plan = s.plan;
  spec.overrides = s.overrides;
  const std::string text = plan_to_json(plan_for(spec)) + "\n";
  out << text;
  if (!cfg.output.dir.empty()) {
    std::filesystem::create_directories(cfg.output.dir);
    write_file_atomic(artifact(cfg, "plan", "json"), text);
  }
  return 0;
}

int cmd_coord(const Flags& f, std::ostream& out, bool depth) {
  const RunConfig cfg = configured(f);
  const CoordCheckResult r = depth ? depth_check(resolved_sweep(cfg)) : coord_check(resolved_sweep(cfg));
  print_slopes(r, out);
  write_artifacts(cfg, depth ? "depthcheck" : "coordcheck", r.runs, jsonl_coord(r), out);
  return report_check(r.check, out);
}

int cmd_lrsweep(const Flags& f, std::ostream& out) {
  const RunConfig cfg = configured(f);
  const LrSweepResult r = lr_sweep(resolved_sweep(cfg));
  out << "width eta_base loss\n";
  for (const SweepCell& c : r.cells)
    out << c.width << " " << format_number(c.eta_base) << " " << format_number(c.loss) << "\n";
  for (const auto& [w, eta] : r.argmin) out << "best width " << w << ": eta_base " << format_number(eta) << "\n";
  out << "drift octaves " << format_number(r.drift_octaves) << "\n";
  write_artifacts(cfg, "lrsweep", r.runs, jsonl_lr(r), out);
  return report_check(r.check, out);
}

int cmd_rankscan(const Flags& f, std::ostream& out) {
  const RunConfig cfg = configured(f);
  const RankScanResult r = rank_scan(resolved_sweep(cfg));
  for (const RankScanRow& row : r.summary)
    out << "width " << row.width << " " << row.layer << " srank first " << format_number(row.srank_first) << " last "
        << format_number(row.srank_last) << "\n";
  out << "bound respected: " << (r.bound_respected ? "yes" : "no") << "\n";
  write_artifacts(cfg, "rankscan", r.runs, jsonl_rank(r), out);
  return report_check(r.check, out);
}

int cmd_oracle(const Flags& f, std::ostream& out) {
  const RunConfig cfg = configured(f);
  const std::vector<OracleCheck> checks = oracle_suite(cfg.seed, cfg.oracle.draws, cfg.oracle.tol);
  std::string csv = "name,max_rel_err,tolerance,draws,passed\n";
  bool ok = true;
  for (const OracleCheck& c : checks) {
    out << std::left << std::setw(30) << c.name << std::right << " max rel err " << std::setw(12)
        << format_number(c.max_rel_err) << "  tol " << format_number(c.tolerance) << "  "
        << (c.passed() ? "ok" : "FAIL") << "\n";
    csv += c.name + "," + format_number(c.max_rel_err) + "," + format_number(c.tolerance) + "," +
           std::to_string(c.draws) + "," + (c.passed() ? "1" : "0") + "\n";
    ok = ok && c.passed();
  }
  if (!cfg.output.dir.empty() && cfg.output.csv) {
    std::filesystem::create_directories(cfg.output.dir);
    write_file_atomic(artifact(cfg, "oracle", "csv"), csv);
  }
  return ok ? 0 : 1;
}

// CSV with a header naming "compute" and "loss" columns.
std::vector<std::pair<double, double>> read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ":1: empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    return cells;
  };
  const auto header = split(line);
  int ci = -1, li = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "compute") ci = static_cast<int>(k);
    if (header[k] == "loss") li = static_cast<int>(k);
  }
  if (ci < 0 || li < 0) throw ConfigError(path + ":1: header needs 'compute' and 'loss' columns");
  std::vector<std::pair<double, double>> out;
  for (int n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto cells = split(line);
    try {
      out.emplace_back(std::stod(cells.at(ci)), std::stod(cells.at(li)));
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(n) + ": malformed row");
    }
  }
  return out;
}

int cmd_multiplier(const Flags& f, std::ostream& out) {
  if (f.baseline.empty() || f.candidate.empty()) throw ConfigError("--baseline and --candidate are required");
  const auto base = read_series(f.baseline);
  const auto cand = read_series(f.candidate);
  std::string csv = "compute,loss,baseline_compute,multiplier,extrapolated\n";
  out << "compute loss baseline_compute multiplier\n";
  for (const auto& pt : cand) {
    const MultiplierResult m = compute_multiplier(base, pt);
    out << format_number(pt.first) << " " << format_number(pt.second) << " " << format_number(m.baseline_compute)
        << " " << format_number(m.multiplier) << (m.extrapolated ? " (extrapolated)" : "") << "\n";
    csv += format_number(pt.first) + "," + format_number(pt.second) + "," + format_number(m.baseline_compute) + "," +
           format_number(m.multiplier) + "," + (m.extrapolated ? "1" : "0") + "\n";
  }
  std::string dir = f.out_dir;
  if (const char* env = std::getenv("MUPRE_OUT"); env && *env) dir = env;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    write_file_atomic((std::filesystem::path(dir) / "multiplier.csv").string(), csv);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preconditioned-optimizer scaling toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "run configuration (JSON)");
  app.add_option("--out", f.out_dir, "artifact directory (MUPRE_OUT overrides)");
  app.add_option("--seed", f.seed, "base seed added to every sweep seed");
  app.add_option("--jobs", f.jobs, "parallel training runs")->check(CLI::PositiveNumber);
  app.add_option("--format", f.format, "write only this format")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* plan = app.add_subcommand("plan", "print the per-layer hyperparameter table");
  auto* coord = app.add_subcommand("coordcheck", "feature-update slope vs width");
  auto* lr = app.add_subcommand("lrsweep", "loss over a learning-rate grid per width");
  auto* rank = app.add_subcommand("rankscan", "stable rank of updates per step");
  auto* depth = app.add_subcommand("depthcheck", "feature-update slope vs depth");
  auto* oracle = app.add_subcommand("oracle", "closed-form oracles vs the optimizer");
  auto* mult = app.add_subcommand("multiplier", "compute multiplier of a candidate loss curve");
  mult->add_option("--baseline", f.baseline, "baseline CSV (compute,loss)");
  mult->add_option("--candidate", f.candidate, "candidate CSV (compute,loss)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*plan) return cmd_plan(f, out);
    if (*coord) return cmd_coord(f, out, false);
    if (*depth) return cmd_coord(f, out, true);
    if (*lr) return cmd_lrsweep(f, out);
    if (*rank) return cmd_rankscan(f, out);
    if (*oracle) return cmd_oracle(f, out);
    if (*mult) return cmd_multiplier(f, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace mupre
