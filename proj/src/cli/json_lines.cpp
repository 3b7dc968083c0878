#include "json.hpp"
#include "mupre/cli.hpp"

namespace mupre {

using json = nlohmann::ordered_json;

namespace {

// nlohmann writes NaN and ±inf as null.
void emit(std::string& out, const json& j) {
  out += j.dump();
  out += '\n';
}

void emit_runs(std::string& out, const std::vector<RunResult>& runs) {
  for (const RunResult& r : runs) {
    json j;
    j["type"] = "run";
    j["run_id"] = r.spec.run_id;
    j["width"] = r.spec.width;
    j["depth"] = r.spec.depth;
    j["seed"] = r.spec.seed;
    j["eta_base"] = r.spec.plan.eta_base;
    j["diverged"] = r.diverged;
    j["diverged_at"] = r.diverged ? json(r.diverged_at) : json(nullptr);
    j["initial_loss"] = r.initial_loss;
    j["final_loss"] = r.final_loss;
    emit(out, j);
  }
}

void emit_check(std::string& out, const CheckOutcome& c) {
  json j;
  j["type"] = "check";
  j["evaluated"] = c.evaluated;
  j["passed"] = c.passed;
  j["detail"] = c.detail;
  emit(out, j);
}

}  // namespace

std::string jsonl_coord(const CoordCheckResult& r) {
  std::string out;
  emit_runs(out, r.runs);
  for (const SlopeRow& s : r.slopes) {
    json j;
    j["type"] = "slope";
    j["probe_step"] = s.probe_step;
    j["layer"] = s.layer;
    j["slope"] = s.fit.slope;
    j["intercept"] = s.fit.intercept;
    j["r2"] = s.fit.r2;
    j["xs"] = s.xs;
    j["values"] = s.values;
    emit(out, j);
  }
  json ex;
  ex["type"] = "excluded";
  ex["run_ids"] = r.excluded;
  emit(out, ex);
  emit_check(out, r.check);
  return out;
}

std::string jsonl_lr(const LrSweepResult& r) {
  std::string out;
  emit_runs(out, r.runs);
  for (const SweepCell& c : r.cells) {
    json j;
    j["type"] = "cell";
    j["width"] = c.width;
    j["eta_base"] = c.eta_base;
    j["loss"] = c.loss;
    j["diverged"] = c.diverged;
    emit(out, j);
  }
  for (const auto& [width, eta] : r.argmin) {
    json j;
    j["type"] = "argmin";
    j["width"] = width;
    j["eta_base"] = eta;
    emit(out, j);
  }
  json d;
  d["type"] = "drift";
  d["octaves"] = r.drift_octaves;
  emit(out, d);
  emit_check(out, r.check);
  return out;
}

std::string jsonl_rank(const RankScanResult& r) {
  std::string out;
  emit_runs(out, r.runs);
  for (const RankScanRow& row : r.summary) {
    json j;
    j["type"] = "srank";
    j["width"] = row.width;
    j["layer"] = row.layer;
    j["first"] = row.srank_first;
    j["last"] = row.srank_last;
    emit(out, j);
  }
  json b;
  b["type"] = "bound";
  b["respected"] = r.bound_respected;
  emit(out, b);
  emit_check(out, r.check);
  return out;
}

}  // namespace mupre
