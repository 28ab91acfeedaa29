#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "robinopt/error.hpp"
#include "robinopt/experiments.hpp"
#include "robinopt/mesh.hpp"

using nlohmann::json;
using namespace robinopt;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("ROBINOPT_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != std::string(s).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InputError(std::string("ROBINOPT_SEED is not a nonnegative integer: '") + s + "'");
  }
}

int report(const std::vector<ScenarioOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    std::cout << (o.name.empty() ? "scenario" : o.name) << ": " << (o.passed ? "ok" : "FAIL") << " (exit "
              << o.exit_code << ")";
    if (!o.passed) std::cout << " " << o.message;
    std::cout << '\n';
  }
  return combined_exit_code(outcomes);
}

struct DomainArgs {
  std::string domain = "square";
  int n = 16;
  int n_boundary = 64;
  int n_rings = 16;
  std::string mesh;
};

void add_domain_options(CLI::App* cmd, DomainArgs& d) {
  cmd->add_option("--domain", d.domain, "square, disk or mesh_file")
      ->check(CLI::IsMember({"square", "disk", "mesh_file"}));
  cmd->add_option("--n", d.n, "square cells per side")->check(CLI::PositiveNumber);
  cmd->add_option("--n-boundary", d.n_boundary, "disk boundary vertices")->check(CLI::Range(3, 1000000));
  cmd->add_option("--n-rings", d.n_rings, "disk rings")->check(CLI::PositiveNumber);
  cmd->add_option("--mesh", d.mesh, "mesh file (implies --domain mesh_file)");
}

json domain_json(const DomainArgs& d) {
  if (!d.mesh.empty()) return {{"type", "mesh_file"}, {"path", d.mesh}};
  return {{"type", d.domain}, {"n", d.n}, {"n_boundary", d.n_boundary}, {"n_rings", d.n_rings}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robinopt: optimization of Robin boundary coefficients"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_dir = "out";
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run a scenario or batch config");
  run->add_option("config", config_path, "config JSON")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "parallel scenarios")->check(CLI::PositiveNumber);

  auto* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
  mesh_cmd->require_subcommand(1);
  auto* gen = mesh_cmd->add_subcommand("gen", "generate a mesh in robinmesh format");
  gen->require_subcommand(1);
  int sq_n = 16, disk_nb = 64, disk_nr = 16;
  std::string mesh_out;
  auto* gen_square = gen->add_subcommand("square", "unit square");
  gen_square->add_option("--n", sq_n, "cells per side")->check(CLI::PositiveNumber);
  gen_square->add_option("-o,--output", mesh_out, "output file (stdout if absent)");
  auto* gen_disk = gen->add_subcommand("disk", "unit disk");
  gen_disk->add_option("--n-boundary", disk_nb, "boundary vertices")->check(CLI::Range(3, 1000000));
  gen_disk->add_option("--n-rings", disk_nr, "rings")->check(CLI::PositiveNumber);
  gen_disk->add_option("-o,--output", mesh_out, "output file (stdout if absent)");

  auto* verify = app.add_subcommand("verify", "run a built-in verification");
  verify->require_subcommand(1);
  DomainArgs dargs;
  long long seed = 0;
  std::string flavor = "compliance", sense = "minimize";
  double v0_fraction = 0.3;
  std::string verify_out = "out";
  struct Kind {
    const char* name;
    const char* scenario;
    const char* help;
  };
  const Kind kinds[] = {{"gradient", "gradient_check", "adjoint gradient vs finite differences"},
                        {"steklov", "steklov_table", "Robin-Steklov spectrum"},
                        {"explicit-min", "verify_explicit_minimizer", "explicit compliance minimizer"},
                        {"serrin", "serrin_check", "constant-beta optimality (ball test)"},
                        {"alpha", "alpha_sweep", "alpha -> infinity limit"}};
  std::string chosen;
  for (const auto& k : kinds) {
    auto* sub = verify->add_subcommand(k.name, k.help);
    add_domain_options(sub, dargs);
    sub->add_option("--seed", seed, "seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", verify_out, "output directory");
    sub->add_option("--V0-fraction", v0_fraction, "V0 / perimeter")->check(CLI::Range(0.0, 1.0));
    if (std::string(k.name) == "gradient") {
      sub->add_option("--flavor", flavor, "boundary, distributed or compliance")
          ->check(CLI::IsMember({"boundary", "distributed", "compliance"}));
      sub->add_option("--sense", sense, "minimize or maximize")->check(CLI::IsMember({"minimize", "maximize"}));
    }
    sub->callback([&chosen, scenario = std::string(k.scenario)] { chosen = scenario; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      const json config = load_json_file(config_path);
      return report(run_config(config, out_dir, jobs, env_seed()));
    }
    if (gen_square->parsed() || gen_disk->parsed()) {
      const Mesh mesh = gen_square->parsed() ? generate_square(sq_n) : generate_disk(disk_nb, disk_nr);
      const std::string text = serialize_mesh(mesh);
      if (mesh_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(mesh_out);
        if (!f || !(f << text)) throw InputError("cannot write " + mesh_out);
      }
      return kExitOk;
    }
    if (verify->parsed()) {
      json config = {{"scenario", chosen},
                     {"domain", domain_json(dargs)},
                     {"seed", seed},
                     {"problem", {{"flavor", flavor}, {"sense", sense}, {"V0_fraction", v0_fraction}}}};
      return report(run_config(config, verify_out, 1, env_seed()));
    }
  } catch (const InputError& e) {
    std::cerr << "robinopt: " << e.what() << '\n';
    return kExitConfig;
  } catch (const HypothesisError& e) {
    std::cerr << "robinopt: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "robinopt: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}
