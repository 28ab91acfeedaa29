#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robinopt/mesh.hpp"
#include "robinopt/optimize.hpp"

namespace robinopt {

inline constexpr const char* kVersion = "1.0.0";

/// Process exit codes of the scenario runner.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitVerification = 4 };

struct DomainConfig {
  std::string type = "square";  ///< square | disk | mesh_file
  int n = 16;
  int n_boundary = 64;
  int n_rings = 16;
  std::string path;
  double stretch_x = 1.0;
  double stretch_y = 1.0;
};

struct ProblemConfig {
  std::string flavor = "compliance";
  std::string sense = "minimize";
  std::string j = "identity";  ///< identity | power | concave_quadratic
  double gamma = 2.0;
  double a = 0.0;               ///< concave quadratic parameter; 0 selects 2 (1 + U0 estimate)
  double f = 1.0;               ///< constant source
  std::optional<double> V0;
  double V0_fraction = 0.3;     ///< V0 = fraction * perimeter when V0 is absent
  bool logistic = false;
  double m = 1.0;               ///< constant resource density
  double newton_tol = 1e-10;
  int max_newton = 50;
  bool strict_source = false;
  double solver_tol = 1e-10;
};

struct ScenarioConfig {
  std::string name;
  std::string kind = "optimize";
  DomainConfig domain;
  ProblemConfig problem;
  OptOptions optimizer;
  int starts = 5;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

/// Parses one scenario object; errors carry the JSON pointer of the offending value.
ScenarioConfig parse_scenario(const nlohmann::json& j, const std::string& pointer = "");

/// Echo of the effective configuration, defaults included.
nlohmann::json to_json(const ScenarioConfig& c);

Mesh build_mesh(const DomainConfig& d);

struct ScenarioOutcome {
  std::string name;
  int exit_code = kExitOk;
  bool passed = true;
  std::string message;
  nlohmann::json report;
};

/// Runs one scenario and writes its artifacts into `out_dir`. Errors are mapped to exit codes, not thrown.
ScenarioOutcome run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir, int jobs = 1);

/// Runs a single scenario or a batch ({"scenarios": [...]}) with up to `jobs` scenarios in parallel.
/// `seed_override` replaces every scenario seed when set.
std::vector<ScenarioOutcome> run_config(const nlohmann::json& config, const std::filesystem::path& out_dir, int jobs,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

/// Worst exit code of a batch (0 when all passed).
int combined_exit_code(const std::vector<ScenarioOutcome>& outcomes);

/// Reads and parses a JSON file; InputError on failure.
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace robinopt
