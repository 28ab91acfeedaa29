#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "robinopt/error.hpp"
#include "robinopt/experiments.hpp"

using namespace robinopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("robinopt_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_error_of(const json& j) {
  try {
    parse_scenario(j);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ROBINOPT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing: defaults and echo") {
  const ScenarioConfig c = parse_scenario(json::object());
  CHECK(c.kind == "optimize");
  CHECK(c.domain.type == "square");
  CHECK(c.problem.flavor == "compliance");
  CHECK(c.starts == 5);
  const json echo = to_json(c);
  CHECK(parse_scenario(echo).problem.V0_fraction == c.problem.V0_fraction);
  CHECK(to_json(parse_scenario(echo)) == echo);

  const ScenarioConfig l = parse_scenario(json::parse(R"({"problem": {"flavor": "distributed", "logistic": {"m": 3}}})"));
  CHECK(l.problem.logistic);
  CHECK(l.problem.m == 3.0);
}

TEST_CASE("config parsing: errors name the offending pointer") {
  CHECK(config_error_of(json::parse(R"({"bogus": 1})")).find("/bogus") != std::string::npos);
  CHECK(config_error_of(json::parse(R"({"domain": {"type": "torus"}})")).find("/domain/type") != std::string::npos);
  CHECK(config_error_of(json::parse(R"({"domain": {"n": 0}})")).find("/domain/n") != std::string::npos);
  CHECK(config_error_of(json::parse(R"({"problem": {"V0_fraction": 1.5}})")).find("/problem/V0_fraction") !=
        std::string::npos);
  CHECK(config_error_of(json::parse(R"({"problem": {"logistic": true}})")).find("/problem/flavor") !=
        std::string::npos);
  CHECK(config_error_of(json::parse(R"({"problem": {"j": {"kind": "power", "gamma": 1}}})")).find("/problem/j/gamma") !=
        std::string::npos);
  CHECK(config_error_of(json::parse(R"({"optimizer": {"backtrack": 2}})")).find("/optimizer/backtrack") !=
        std::string::npos);
  CHECK(config_error_of(json::parse(R"({"seed": -1})")).find("/seed") != std::string::npos);
  CHECK(config_error_of(json::parse(R"({"scenario": "dance"})")).find("/scenario") != std::string::npos);
}

TEST_CASE("scenario artifacts and determinism") {
  const json cfg = json::parse(R"({"name": "opt", "scenario": "optimize", "seed": 4, "starts": 2,
      "domain": {"type": "square", "n": 6}, "problem": {"sense": "maximize"}})");
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const ScenarioOutcome oa = run_scenario(parse_scenario(cfg), a);
  const ScenarioOutcome ob = run_scenario(parse_scenario(cfg), b, 2);
  CHECK(oa.exit_code == kExitOk);
  for (const char* f : {"run.json", "report.json", "beta.csv", "fields.csv", "history.csv", "boundary.svg"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
  }
  for (const char* f : {"beta.csv", "fields.csv", "history.csv", "report.json", "boundary.svg"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const json run = json::parse(slurp(a / "run.json"));
  CHECK(run["seed"] == 4);
  CHECK(run["config"]["starts"] == 2);

  const std::string beta = slurp(a / "beta.csv");
  CHECK(beta.rfind("edge,", 0) == 0);
}

TEST_CASE("error mapping to exit codes") {
  SUBCASE("hypothesis violation") {
    json cfg = json::parse(R"({"scenario": "optimize", "domain": {"type": "square", "n": 4}, "problem": {"V0": 10}})");
    CHECK(run_scenario(parse_scenario(cfg), scratch("v0")).exit_code == kExitConfig);
  }
  SUBCASE("missing mesh file") {
    json cfg = json::parse(R"({"domain": {"type": "mesh_file", "path": "/nonexistent/m.txt"}})");
    CHECK(run_scenario(parse_scenario(cfg), scratch("nofile")).exit_code == kExitConfig);
  }
  SUBCASE("verification failure") {
    json cfg = json::parse(R"({"scenario": "steklov_table", "domain": {"type": "disk", "n_boundary": 12, "n_rings": 2},
        "params": {"beta": 0.5, "count": 5, "reference_tolerance": 1e-9}})");
    const ScenarioOutcome o = run_scenario(parse_scenario(cfg), scratch("verif"));
    CHECK(o.exit_code == kExitVerification);
    CHECK_FALSE(o.passed);
  }
}

TEST_CASE("batch configs") {
  const json batch = json::parse(R"({"seed": 3, "domain": {"type": "square", "n": 6},
      "scenarios": [{"name": "a", "scenario": "serrin_check"}, {"name": "b", "scenario": "steklov_table",
        "domain": {"type": "disk", "n_boundary": 32, "n_rings": 6}, "params": {"count": 3, "beta": 1.0}}]})");
  const fs::path out = scratch("batch");
  const auto outcomes = run_config(batch, out, 2);
  REQUIRE(outcomes.size() == 2);
  CHECK(fs::exists(out / "a" / "report.json"));
  CHECK(fs::exists(out / "b" / "steklov.csv"));
  CHECK(combined_exit_code(outcomes) == kExitOk);
  CHECK(json::parse(slurp(out / "b" / "run.json"))["config"]["domain"]["type"] == "disk");

  json dup = batch;
  dup["scenarios"][1]["name"] = "a";
  CHECK_THROWS_AS(run_config(dup, scratch("dup"), 1), InputError);

  const fs::path seeded = scratch("seed");
  const auto over = run_config(batch, seeded, 1, 77);
  CHECK(over[0].exit_code == kExitOk);
  CHECK(json::parse(slurp(seeded / "a" / "run.json"))["seed"] == 77);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  CHECK(cli("--version") == 0);
  CHECK(cli("frobnicate") == kExitConfig);
  CHECK(cli("run " + (dir / "missing.json").string()) == kExitConfig);
  {
    std::ofstream(dir / "bad.json") << R"({"domain": {"type": "torus"}})";
    std::ofstream(dir / "broken.json") << "{ not json";
    std::ofstream(dir / "ok.json") << R"({"scenario": "serrin_check", "domain": {"type": "square", "n": 6}})";
  }
  CHECK(cli("run " + (dir / "bad.json").string() + " --out " + (dir / "o1").string()) == kExitConfig);
  CHECK(cli("run " + (dir / "broken.json").string()) == kExitConfig);
  CHECK(cli("run " + (dir / "ok.json").string() + " --out " + (dir / "o2").string()) == kExitOk);
  CHECK(fs::exists(dir / "o2" / "report.json"));
  CHECK(cli("mesh gen square --n 3 -o " + (dir / "sq.mesh").string()) == kExitOk);
  CHECK(cli("verify steklov --domain disk --n-boundary 128 --n-rings 24 --out " + (dir / "o3").string()) == kExitOk);
  CHECK(cli("verify gradient --mesh " + (dir / "sq.mesh").string() + " --out " + (dir / "o4").string()) == kExitOk);
  const std::string bad_seed = "ROBINOPT_SEED=abc " + std::string(ROBINOPT_CLI) + " run " + (dir / "ok.json").string() +
                               " --out " + (dir / "o5").string() + " >/dev/null 2>&1";
  const int st = std::system(bad_seed.c_str());
  CHECK(WEXITSTATUS(st) == kExitConfig);
}
