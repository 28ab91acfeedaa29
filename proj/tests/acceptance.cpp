// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "robinopt/adjoint.hpp"
#include "robinopt/admissible.hpp"
#include "robinopt/alpha_limit.hpp"
#include "robinopt/assembly.hpp"
#include "robinopt/criteria.hpp"
#include "robinopt/experiments.hpp"
#include "robinopt/optimize.hpp"
#include "robinopt/state.hpp"
#include "robinopt/steklov.hpp"

using namespace robinopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Named {
  std::string name;
  ProblemSpec spec;
};

ProblemSpec base(const Mesh& m, Flavor fl, Sense s, CriterionJ j, double V0_fraction = 0.3) {
  ProblemSpec p;
  p.flavor = fl;
  p.sense = s;
  p.j = j;
  p.f = ScalarField::constant(m, 1.0);
  p.V0 = V0_fraction * m.perimeter();
  return p;
}

ProblemSpec with_logistic(ProblemSpec p, const Mesh& m, double resource) {
  LogisticData d;
  d.m = ScalarField::constant(m, resource);
  p.logistic = d;
  return p;
}

/// The five flavors of the derivative checks.
std::vector<Named> derivative_flavors(const Mesh& m) {
  std::vector<Named> out = {
      {"boundary/identity", base(m, Flavor::boundary, Sense::maximize, CriterionJ::identity())},
      {"boundary/power2", base(m, Flavor::boundary, Sense::maximize, CriterionJ::power(2.0))},
      {"distributed/identity", base(m, Flavor::distributed, Sense::maximize, CriterionJ::identity())},
      {"compliance", base(m, Flavor::compliance, Sense::minimize, CriterionJ::identity())},
      {"logistic", with_logistic(base(m, Flavor::distributed, Sense::maximize, CriterionJ::identity()), m, 4.0)}};
  for (auto& n : out) {
    n.spec.state.solve.tol = 1e-12;
    if (n.spec.logistic) n.spec.logistic->newton_tol = 1e-12;
  }
  return out;
}

double criterion_at(const ProblemSpec& s, const Mesh& m, const BoundaryField& b) {
  return eval_criterion(s, m, solve_state(s, m, b));
}

BoundaryField along(const BoundaryField& b, const BoundaryField& h, double t) {
  return BoundaryField(b.values + t * h.values);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-14); }

Verdict gradient_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_case;
  for (const Mesh& m : {generate_square(16), generate_disk(64, 16)}) {
    for (const auto& c : derivative_flavors(m)) {
      const AdmissibleSpec adm = AdmissibleSpec::for_mesh(m, c.spec.V0);
      for (int i = 0; i < 20; ++i) {
        Rng rng(derive_seed(101, static_cast<std::uint64_t>(i)));
        const BoundaryField beta = random_interior(adm, rng);
        const BoundaryField h = random_direction(adm, rng);
        const double adjoint = directional_derivative(m, gradient(c.spec, m, beta).phi, h);
        const auto d = [&](double t) {
          return (criterion_at(c.spec, m, along(beta, h, t)) - criterion_at(c.spec, m, along(beta, h, -t))) / (2 * t);
        };
        const double fd = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
        const double e = rel(fd, adjoint);
        if (e > worst) {
          worst = e;
          worst_case = c.name;
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-4 && secs <= 120.0,
          "max rel error " + fmt(worst) + " (" + worst_case + "), 200 pairs in " + fmt(secs) + " s"};
}

Verdict second_derivative_consistency() {
  double worst = 0.0;
  std::string worst_case;
  for (const Mesh& m : {generate_square(16), generate_disk(64, 16)}) {
    for (const auto& c : derivative_flavors(m)) {
      const AdmissibleSpec adm = AdmissibleSpec::for_mesh(m, c.spec.V0);
      for (int i = 0; i < 10; ++i) {
        Rng rng(derive_seed(202, static_cast<std::uint64_t>(i)));
        const BoundaryField beta = random_interior(adm, rng);
        const BoundaryField h = random_direction(adm, rng);
        const double eps = 1e-3;
        const double fd = (criterion_at(c.spec, m, along(beta, h, eps)) - 2.0 * criterion_at(c.spec, m, beta) +
                           criterion_at(c.spec, m, along(beta, h, -eps))) /
                          (eps * eps);
        const double e = rel(fd, second_derivative(c.spec, m, beta, h));
        if (e > worst) {
          worst = e;
          worst_case = c.name;
        }
      }
    }
  }
  return {worst <= 1e-2, "max rel error " + fmt(worst) + " (" + worst_case + "), eps 1e-3, 100 pairs"};
}

Verdict radial_oracles() {
  const Mesh m = generate_disk(256, 32);
  const ProblemSpec p = base(m, Flavor::compliance, Sense::minimize, CriterionJ::identity());
  const ScalarField u = solve_robin(m, BoundaryField::constant(m, 1.0), p.f);
  double bnd = 0.0;
  for (int v : m.boundary_vertices()) bnd = std::max(bnd, std::abs(u[static_cast<std::size_t>(v)] - 0.5));
  const double center = std::abs(u[0] - 0.75);
  const double comp = std::abs(eval_criterion(p, m, u) - 0.625 * kPi);
  return {center <= 5e-3 && bnd <= 5e-3 && comp <= 1e-2,
          "|u(0)-0.75| " + fmt(center) + ", max|u-0.5| on boundary " + fmt(bnd) + ", |F-0.625pi| " + fmt(comp)};
}

Verdict steklov_spectrum() {
  const Mesh m = generate_disk(128, 24);
  const EigPairs e = steklov_eigs(m, BoundaryField::constant(m, 0.5), 5);
  const double ref[5] = {0.5, 1.5, 1.5, 2.5, 2.5};
  double dev = 0.0;
  for (int k = 0; k < 5; ++k) dev = std::max(dev, std::abs(e.sigmas[static_cast<std::size_t>(k)] - ref[k]));
  const SparseMatrix Mb = boundary_mass(m, BoundaryField::constant(m, 1.0));
  double ortho = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double g = e.modes[static_cast<std::size_t>(i)].values.dot(Mb * e.modes[static_cast<std::size_t>(j)].values);
      ortho = std::max(ortho, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  return {dev <= 3e-2 && ortho <= 1e-8, "max sigma deviation " + fmt(dev) + ", orthonormality error " + fmt(ortho)};
}

ScenarioOutcome scenario(const std::string& text, const std::string& dir) {
  return run_scenario(parse_scenario(json::parse(text)), fs::temp_directory_path() / ("robinopt_acceptance_" + dir), 2);
}

Verdict explicit_minimizer() {
  Verdict v;
  for (const auto& [domain, tag] : {std::pair{std::string(R"({"type": "square", "n": 24})"), "square"},
                                    std::pair{std::string(R"({"type": "disk", "n_boundary": 96, "n_rings": 20})"), "disk"}}) {
    const ScenarioOutcome o = scenario(R"({"scenario": "verify_explicit_minimizer", "seed": 5, "domain": )" + domain +
                                           R"(, "params": {"V0_ratio": 0.5, "starts": 3, "tolerance_factor": 5}})",
                                       std::string("explicit_") + tag);
    v.pass = v.pass && o.passed;
    if (o.report.contains("max_optimizer_distance")) {
      v.detail += std::string(tag) + ": distance " + fmt(o.report["max_optimizer_distance"].get<double>()) +
                  ", state error " + fmt(o.report["state_max_error"].get<double>()) + " vs 5h " +
                  fmt(o.report["tolerance"].get<double>()) + "; ";
    } else {
      v.detail += std::string(tag) + ": " + o.message + "; ";
    }
  }
  return v;
}

Verdict serrin_discrimination() {
  // 96 boundary edges on both domains
  const auto residual = [](const Mesh& m) {
    const ProblemSpec p = base(m, Flavor::compliance, Sense::minimize, CriterionJ::identity());
    return kkt_residual(p, m, BoundaryField::constant(m, p.V0 / m.perimeter())).residual;
  };
  const double disk = residual(generate_disk(96, 20));
  const double square = residual(generate_square(24));
  return {disk <= 0.1 * square, "disk " + fmt(disk) + ", square " + fmt(square) + ", ratio " + fmt(disk / square)};
}

OptResult best_run(const ProblemSpec& p, const Mesh& m, int starts, std::uint64_t seed) {
  OptOptions o;
  o.max_iter = 1000;
  const MultistartResult ms = multistart(p, m, o, starts, seed, 4);
  return ms.runs[ms.best];
}

Verdict bangbang_structure() {
  Verdict v;
  const Mesh m = generate_disk(64, 16);
  const std::vector<Named> runs = {
      {"boundary", base(m, Flavor::boundary, Sense::maximize, CriterionJ::identity())},
      {"distributed", base(m, Flavor::distributed, Sense::maximize, CriterionJ::identity())},
      {"compliance", base(m, Flavor::compliance, Sense::maximize, CriterionJ::identity())},
      {"logistic", with_logistic(base(m, Flavor::distributed, Sense::maximize, CriterionJ::identity()), m, 1.0)}};
  for (const auto& r : runs) {
    const OptResult res = best_run(r.spec, m, 3, 7);
    const double frac = intermediate_measure(m, res.beta_star) / m.perimeter();
    v.pass = v.pass && frac <= 0.02;
    v.detail += r.name + " intermediate " + fmt(100 * frac) + "%; ";
  }
  const Mesh fine = generate_disk(256, 32);
  const std::vector<Named> certs = {
      {"boundary", base(fine, Flavor::boundary, Sense::maximize, CriterionJ::identity())},
      {"distributed", base(fine, Flavor::distributed, Sense::maximize, CriterionJ::identity())},
      {"compliance", base(fine, Flavor::compliance, Sense::maximize, CriterionJ::identity())},
      {"logistic", with_logistic(base(fine, Flavor::distributed, Sense::maximize, CriterionJ::identity()), fine, 1.0)}};
  const BoundaryField beta = BoundaryField::constant(fine, certs[0].spec.V0 / fine.perimeter());
  const EigPairs all = steklov_eigs(fine, beta, 200);
  int K = -1;
  for (int k = 0; k < all.count() && K < 0; ++k) {
    if (all.sigmas[static_cast<std::size_t>(k)] >= 50.0) K = k;
  }
  if (K < 0) return {false, v.detail + "no sigma_K >= 50 among 200 modes"};
  for (const auto& c : certs) {
    const BangBangCertificate cert = bangbang_certificate(c.spec, fine, beta, K, 13);
    v.pass = v.pass && cert.ddotJ > 0.0 && cert.sigma_K >= 50.0;
    v.detail += c.name + " ddotJ " + fmt(cert.ddotJ) + "; ";
  }
  v.detail += "K " + std::to_string(K) + ", sigma_K " + fmt(all.sigmas[static_cast<std::size_t>(K)]);
  return v;
}

Verdict relaxation_structure() {
  Verdict v;
  const Mesh m = generate_disk(64, 16);
  for (Flavor fl : {Flavor::boundary, Flavor::distributed}) {
    const ProblemSpec p = base(m, fl, Sense::minimize, CriterionJ::identity());
    const OptResult res = best_run(p, m, 3, 9);
    const double inter = intermediate_measure(m, res.beta_star) / m.perimeter();
    const double zero = zero_set_measure(m, res.beta_star) / m.perimeter();
    v.pass = v.pass && inter >= 0.10 && zero <= 0.02;
    v.detail += to_string(fl) + " intermediate " + fmt(100 * inter) + "%, zero set " + fmt(100 * zero) + "%; ";
  }
  const Mesh cm = generate_disk(128, 16);
  const ScalarField f = ScalarField::constant(cm, 1.0);
  BoundaryField arc = BoundaryField::constant(cm, 0.0);
  for (std::size_t e = 0; e < arc.size() / 2; ++e) arc[e] = 1.0;
  const double U0 = estimate_U0(cm, f, boundary_integral(cm, arc), 20, 3);
  const RelaxationCertificate cert = relaxation_certificate(cm, arc, f, U0, 2.0);
  v.pass = v.pass && cert.C > cert.Lambda2 * cert.Kconst && cert.ddotJ < 0.0;
  v.detail += "certificate ddotJ " + fmt(cert.ddotJ) + " (C " + fmt(cert.C) + " > Lambda2 K " +
              fmt(cert.Lambda2 * cert.Kconst) + ")";
  return v;
}

Verdict compliance_convexity() {
  double worst_gap = -1e300, min_second = 1e300;
  for (const Mesh& m : {generate_square(16), generate_disk(64, 16)}) {
    ProblemSpec p = base(m, Flavor::compliance, Sense::minimize, CriterionJ::identity());
    p.state.solve.tol = 1e-12;
    const AdmissibleSpec adm = AdmissibleSpec::for_mesh(m, p.V0);
    Rng rng(303);
    for (int i = 0; i < 50; ++i) {
      const BoundaryField b1 = random_feasible(adm, rng), b2 = random_feasible(adm, rng);
      const double mid = criterion_at(p, m, BoundaryField(0.5 * (b1.values + b2.values)));
      worst_gap = std::max(worst_gap, mid - 0.5 * (criterion_at(p, m, b1) + criterion_at(p, m, b2)));
      const BoundaryField beta = random_interior(adm, rng);
      min_second = std::min(min_second, second_derivative(p, m, beta, random_direction(adm, rng)));
    }
  }
  return {worst_gap <= 1e-10 && min_second > 0.0,
          "max midpoint gap " + fmt(worst_gap) + ", min second derivative " + fmt(min_second)};
}

Verdict alpha_limit() {
  const Mesh m = generate_square(24);
  std::vector<int> gamma;
  for (std::size_t e = 0; e < m.num_boundary_edges(); ++e) {
    if (m.boundary_edges()[e].normal.y() < -0.5) gamma.push_back(static_cast<int>(e));
  }
  const AlphaSweep s = alpha_sweep(m, gamma, ScalarField::constant(m, 1.0), {1, 4, 16, 64, 256, 1024});
  bool decreasing = true;
  for (std::size_t k = 1; k < s.rows.size(); ++k) {
    decreasing = decreasing && s.rows[k].l2_error < s.rows[k - 1].l2_error &&
                 s.rows[k].gamma_trace_sq < s.rows[k - 1].gamma_trace_sq;
  }
  const double ratio = s.rows.back().l2_error / s.limit_l2_norm;
  const double trace = s.rows.back().gamma_trace_sq / s.rows.front().gamma_trace_sq;
  return {decreasing && ratio <= 0.02 && trace <= 1e-3,
          std::string(decreasing ? "monotone" : "not monotone") + ", e(1024)/|v| " + fmt(ratio) + ", trace ratio " +
              fmt(trace)};
}

Verdict coercivity_positivity() {
  double min_eig = 1e300, min_u = 1e300;
  for (const Mesh& m : {generate_square(16), generate_disk(64, 16)}) {
    const AdmissibleSpec adm = AdmissibleSpec::for_mesh(m, 0.3 * m.perimeter());
    const Eigen::MatrixXd K(stiffness(m));
    const ScalarField f = ScalarField::constant(m, 1.0);
    Rng rng(404);
    for (int i = 0; i < 20; ++i) {
      const BoundaryField beta = random_feasible(adm, rng);
      const Eigen::MatrixXd A = K + Eigen::MatrixXd(boundary_mass(m, beta));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues()[0]);
      min_u = std::min(min_u, solve_robin(m, beta, f).values.minCoeff());
    }
  }
  return {min_eig > 0.0 && min_u > 0.0, "min eigenvalue " + fmt(min_eig) + ", min nodal u " + fmt(min_u)};
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"optimize", R"({"scenario": "optimize", "seed": 17, "starts": 3, "domain": {"type": "disk", "n_boundary": 48, "n_rings": 8}, "problem": {"flavor": "boundary", "sense": "maximize"}})"},
      {"gradient", R"({"scenario": "gradient_check", "seed": 17, "domain": {"type": "square", "n": 8}, "problem": {"flavor": "distributed"}, "params": {"pairs": 4}})"},
      {"relaxation", R"({"scenario": "certificate", "seed": 17, "domain": {"type": "disk", "n_boundary": 48, "n_rings": 8}, "params": {"kind": "relaxation", "U0_samples": 4}})"}};
  std::size_t compared = 0;
  for (const auto& [tag, text] : configs) {
    const fs::path a = fs::temp_directory_path() / ("robinopt_acceptance_det_a_" + tag);
    const fs::path b = fs::temp_directory_path() / ("robinopt_acceptance_det_b_" + tag);
    fs::remove_all(a);
    fs::remove_all(b);
    run_scenario(parse_scenario(json::parse(text)), a, 1);
    run_scenario(parse_scenario(json::parse(text)), b, 3);
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      if (read_file(entry.path()) != read_file(b / entry.path().filename())) {
        return {false, tag + "/" + entry.path().filename().string() + " differs"};
      }
    }
  }
  return {compared >= 6, std::to_string(compared) + " CSV files byte-identical across reruns"};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"gradient consistency", gradient_consistency},
      {"second-derivative consistency", second_derivative_consistency},
      {"radial oracles", radial_oracles},
      {"Steklov spectrum", steklov_spectrum},
      {"explicit minimizer", explicit_minimizer},
      {"Serrin discrimination", serrin_discrimination},
      {"bang-bang structure", bangbang_structure},
      {"relaxation structure", relaxation_structure},
      {"compliance convexity", compliance_convexity},
      {"alpha limit", alpha_limit},
      {"coercivity and positivity", coercivity_positivity},
      {"determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %2zu %s: %s -- %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
