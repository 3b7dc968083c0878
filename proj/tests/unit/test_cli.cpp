#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mupre/cli.hpp"

using namespace mupre;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mupre");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mupre_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTinyCoord = R"({
  "model": {"widths": [8, 16, 32], "depths": [3], "seed": 1},
  "optimizer": {"rule": "muon"},
  "scaling": {"param": "muP", "base_width": 8, "eta_base": 0.01},
  "sweep": {"name": "tiny", "steps": 4, "batch_size": 4, "probe_size": 4, "probe_steps": [3], "max_abs_slope": 100}
})";

int system_exit(const std::string& cmd) {
  const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config errors carry file, line and key path") {
  const std::string bad = std::string(MUPRE_SOURCE_DIR) + "/tests/data/negative_width.json";
  const CliRun r = cli({"plan", "--config", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("negative_width.json:4: model.widths[1]") != std::string::npos);

  CHECK_THROWS_WITH_AS(parse_config("{\n  \"sweep\": {\n    \"stepz\": 3\n  }\n}", "x.json"),
                       doctest::Contains("x.json:3: sweep.stepz: unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("{\"optimizer\": {\"rule\": \"nadam\"}}", "y.json"),
                       doctest::Contains("y.json:1: optimizer.rule"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("{\"model\": {\"widths\": [8]},\n \"sweep\": {\"steps\": 0}}", "z.json"),
                       doctest::Contains("z.json:2: sweep.steps"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"model\": ", "t.json"), ConfigError);
  CHECK(cli({"plan", "--config", "/nonexistent/cfg.json"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"plan"}).code == 2);
}

TEST_CASE("value line scanner") {
  const auto lines = json_value_lines("{\n \"a\": {\n  \"b\": [1,\n 2]\n },\n \"c\": \"x\"\n}");
  CHECK(lines.at("a") == 2);
  CHECK(lines.at("a.b") == 3);
  CHECK(lines.at("a.b[1]") == 4);
  CHECK(lines.at("c") == 6);
}

TEST_CASE("seed flag offsets every sweep seed") {
  RunConfig cfg = parse_config(R"({"sweep": {"seeds": [0, 5]}, "model": {"seed": 10}})");
  CHECK(resolved_sweep(cfg).seeds == std::vector<unsigned long long>{10, 15});
}

TEST_CASE("plan output re-ingested as overrides reproduces the table") {
  const fs::path dir = scratch("plan");
  const std::string cfg = std::string(MUPRE_SOURCE_DIR) + "/configs/plan_muon.json";
  const CliRun first = cli({"plan", "--config", cfg});
  REQUIRE(first.code == 0);
  const PlanTable table = plan_from_json(first.out);
  REQUIRE(table.size() == 3);

  // A different base plan, overridden by the emitted table.
  const std::string again = write(dir / "again.json", R"({
  "model": {"widths": [256], "depths": [3]},
  "optimizer": {"rule": "muon"},
  "scaling": {"param": "SP", "eta_base": 0.5, "overrides": )" + first.out + R"(},
  "sweep": {"name": "again"}
})");
  const CliRun second = cli({"plan", "--config", again});
  REQUIRE(second.code == 0);
  CHECK(second.out == first.out);
  const PlanTable table2 = plan_from_json(second.out);
  for (std::size_t k = 0; k < table.size(); ++k) {
    CHECK(table2[k].name == table[k].name);
    CHECK(table2[k].hyper.eta == table[k].hyper.eta);
    CHECK(table2[k].hyper.eps == table[k].hyper.eps);
    CHECK(table2[k].hyper.sigma_init == table[k].hyper.sigma_init);
    CHECK(table2[k].hyper.residual_mult == table[k].hyper.residual_mult);
    CHECK(table2[k].hyper.lambda_wd == table[k].hyper.lambda_wd);
  }
}

TEST_CASE("coordcheck writes a CSV with the fixed header, deterministically") {
  const fs::path dir = scratch("coord");
  const std::string cfg = write(dir / "tiny.json", kTinyCoord);
  const CliRun a = cli({"coordcheck", "--config", cfg, "--out", (dir / "a").string()});
  REQUIRE(a.code == 0);
  const std::string csv = slurp(dir / "a" / "tiny_coordcheck.csv");
  CHECK(csv.substr(0, csv.find('\n')) == kCsvHeader);
  CHECK(fs::exists(dir / "a" / "tiny_coordcheck.jsonl"));
  CHECK(!fs::exists(dir / "a" / "tiny_coordcheck.csv.tmp"));

  REQUIRE(cli({"coordcheck", "--config", cfg, "--out", (dir / "b").string(), "--format", "csv"}).code == 0);
  CHECK(slurp(dir / "b" / "tiny_coordcheck.csv") == csv);
  CHECK(!fs::exists(dir / "b" / "tiny_coordcheck.jsonl"));

  REQUIRE(cli({"coordcheck", "--config", cfg, "--out", (dir / "c").string(), "--seed", "2"}).code == 0);
  CHECK(slurp(dir / "c" / "tiny_coordcheck.csv") != csv);

  // MUPRE_OUT wins over --out
  setenv("MUPRE_OUT", (dir / "env").string().c_str(), 1);
  const int code = cli({"coordcheck", "--config", cfg, "--out", (dir / "d").string()}).code;
  unsetenv("MUPRE_OUT");
  CHECK(code == 0);
  CHECK(fs::exists(dir / "env" / "tiny_coordcheck.csv"));
  CHECK(!fs::exists(dir / "d"));
}

TEST_CASE("failed check exits 1") {
  const fs::path dir = scratch("fail");
  std::string text = kTinyCoord;
  text.replace(text.find("\"max_abs_slope\": 100"), 20, "\"max_abs_slope\": 0, \"min_slope\": 50");
  const CliRun r = cli({"coordcheck", "--config", write(dir / "strict.json", text)});
  CHECK(r.code == 1);
  CHECK(r.out.find("check: FAIL") != std::string::npos);
}

TEST_CASE("multiplier command") {
  const fs::path dir = scratch("mult");
  std::string base = "compute,loss\n", cand = "loss,compute\n";
  for (int k = 0; k <= 10; ++k) {
    const double c = std::pow(10.0, k);
    base += std::to_string(c) + "," + std::to_string(std::pow(c, -0.05)) + "\n";
    if (k > 0 && k < 10) cand += std::to_string(std::pow(c * 1.4, -0.05)) + "," + std::to_string(c) + "\n";
  }
  const CliRun r = cli({"multiplier", "--baseline", write(dir / "b.csv", base), "--candidate",
                        write(dir / "c.csv", cand), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "multiplier.csv");
  CHECK(csv.rfind("compute,loss,baseline_compute,multiplier,extrapolated\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    const double m = std::stod(line.substr(line.find(',', line.find(',', line.find(',') + 1) + 1) + 1));
    CHECK(m == doctest::Approx(1.4).epsilon(1e-3));
    ++rows;
  }
  CHECK(rows == 9);
  CHECK(cli({"multiplier", "--baseline", (dir / "missing.csv").string(), "--candidate", (dir / "c.csv").string()})
            .code == 2);
}

TEST_CASE("exit codes of the built executable") {
  const std::string exe = MUPRE_CLI_PATH;
  const std::string src = MUPRE_SOURCE_DIR;
  CHECK(system_exit(exe + " plan --config " + src + "/configs/plan_muon.json") == 0);
  CHECK(system_exit(exe + " plan --config " + src + "/tests/data/negative_width.json") == 2);
  CHECK(system_exit(exe + " nosuchcommand") == 2);
  CHECK(system_exit(exe + " plan --config " + src + "/configs/plan_muon.json --format xml") == 2);
}
