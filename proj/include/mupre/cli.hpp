#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mupre/harness.hpp"

namespace mupre {

struct OutputSpec {
  std::string dir;  // empty: stdout only
  bool csv = true;
  bool jsonl = true;
};

struct OracleSpec {
  int draws = 100;
  OracleTolerances tol;
};

// Parsed run configuration file (JSON).
struct RunConfig {
  SweepConfig sweep;
  unsigned long long seed = 0;  // added to every entry of sweep.seeds
  OutputSpec output;
  OracleSpec oracle;
  std::string source = "<config>";
};

// Line of every value in a JSON document, keyed by path ("model.widths[0]").
std::map<std::string, int> json_value_lines(const std::string& text);

// Errors are ConfigError with "source:line: path: message".
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// Seeds actually used: cfg.seed + each sweep seed.
SweepConfig resolved_sweep(const RunConfig& cfg);

// ---- JSON lines ----

std::string jsonl_coord(const CoordCheckResult& r);
std::string jsonl_lr(const LrSweepResult& r);
std::string jsonl_rank(const RankScanResult& r);

// ---- entry point ----

// Exit codes: 0 pass, 1 check failed, 2 invalid config or usage.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mupre
