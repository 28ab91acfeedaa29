#include "robinopt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "robinopt/adjoint.hpp"
#include "robinopt/admissible.hpp"
#include "robinopt/alpha_limit.hpp"
#include "robinopt/assembly.hpp"
#include "robinopt/criteria.hpp"
#include "robinopt/error.hpp"
#include "robinopt/rng.hpp"
#include "robinopt/state.hpp"
#include "robinopt/steklov.hpp"

namespace robinopt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config access with JSON-pointer error messages.

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

[[noreturn]] void config_error(const std::string& pointer, const std::string& what) {
  throw InputError("config error at " + (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

class Obj {
 public:
  Obj(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j_.is_object()) config_error(ptr_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) config_error(at(it.key()), "unknown key");
    }
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  [[nodiscard]] std::string at(const std::string& key) const { return ptr_ + "/" + escape_token(key); }
  [[nodiscard]] const json& raw(const char* key) const { return j_.at(key); }

  double num(const char* key, double def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) config_error(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(at(key), "expected a finite number");
    return x;
  }
  double positive(const char* key, double def) const {
    const double x = num(key, def);
    if (!(x > 0.0)) config_error(at(key), "expected a positive number");
    return x;
  }
  long long integer(const char* key, long long def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) config_error(at(key), "expected an integer");
    return v.get<long long>();
  }
  int count(const char* key, int def, int min_value) const {
    const long long x = integer(key, def);
    if (x < min_value || x > 1000000) config_error(at(key), "expected an integer >= " + std::to_string(min_value));
    return static_cast<int>(x);
  }
  std::string str(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) config_error(at(key), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) config_error(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string one_of(const char* key, const std::string& def, std::initializer_list<const char*> choices) const {
    const std::string s = str(key, def);
    for (const char* c : choices) {
      if (s == c) return s;
    }
    std::string list;
    for (const char* c : choices) list += std::string(list.empty() ? "" : ", ") + c;
    config_error(at(key), "'" + s + "' is not one of: " + list);
  }
  [[nodiscard]] const std::string& pointer() const { return ptr_; }

 private:
  const json& j_;
  std::string ptr_;
};

const json& empty_object() {
  static const json e = json::object();
  return e;
}

// ---------------------------------------------------------------------------
// Output helpers.

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericalError("cannot write " + path.string());
  out << content;
  if (!out) throw NumericalError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

struct Column {
  std::string name;
  const Vector* values;
};

void write_edge_csv(const fs::path& path, const Mesh& mesh, const std::vector<Column>& cols) {
  std::ostringstream os;
  os << "edge,arclength";
  for (const auto& c : cols) os << ',' << c.name;
  os << '\n';
  const std::vector<double> s = mesh.edge_midpoint_arclength();
  for (std::size_t e = 0; e < mesh.num_boundary_edges(); ++e) {
    os << e << ',' << fmt(s[e]);
    for (const auto& c : cols) os << ',' << fmt((*c.values)[static_cast<Eigen::Index>(e)]);
    os << '\n';
  }
  write_file(path, os.str());
}

void write_fields_csv(const fs::path& path, const Mesh& mesh, const std::vector<Column>& cols) {
  std::ostringstream os;
  os << "vertex,x,y";
  for (const auto& c : cols) os << ',' << c.name;
  os << '\n';
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    os << v << ',' << fmt(mesh.vertices()[v].x()) << ',' << fmt(mesh.vertices()[v].y());
    for (const auto& c : cols) os << ',' << fmt((*c.values)[static_cast<Eigen::Index>(v)]);
    os << '\n';
  }
  write_file(path, os.str());
}

void write_history_csv(const fs::path& path, const std::vector<HistoryRow>& history) {
  std::ostringstream os;
  os << "iter,value,pg_norm,step\n";
  for (const auto& r : history) os << r.iter << ',' << fmt(r.value) << ',' << fmt(r.pg_norm) << ',' << fmt(r.step) << '\n';
  write_file(path, os.str());
}

/// Step plot of edge fields against normalized arclength.
void write_boundary_svg(const fs::path& path, const Mesh& mesh, const std::vector<Column>& cols,
                        const std::string& title) {
  constexpr double W = 720, H = 300, ml = 50, mr = 20, mt = 30, mb = 40;
  double lo = 0.0, hi = 1.0;
  for (const auto& c : cols) {
    lo = std::min(lo, c.values->minCoeff());
    hi = std::max(hi, c.values->maxCoeff());
  }
  const double P = mesh.perimeter();
  const auto X = [&](double s) { return ml + (W - ml - mr) * s / P; };
  const auto Y = [&](double v) { return H - mb - (H - mt - mb) * (v - lo) / (hi - lo); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << Y(lo) << "\" x2=\"" << W - mr << "\" y2=\"" << Y(lo)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (double v : {lo, 0.0, 1.0, hi}) {
    os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(v) + 4 << "\" font-family=\"sans-serif\" font-size=\"11\" "
       << "text-anchor=\"end\">" << std::setprecision(3) << v << std::setprecision(2) << "</text>\n";
  }
  os << "<text x=\"" << (W + ml) / 2 << "\" y=\"" << H - 8 << "\" font-family=\"sans-serif\" font-size=\"11\" "
     << "text-anchor=\"middle\">arclength (perimeter " << std::setprecision(4) << P << std::setprecision(2)
     << ")</text>\n";
  for (std::size_t c = 0; c < cols.size(); ++c) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[c % 4] << "\" stroke-width=\"1.5\" points=\"";
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_boundary_edges(); ++e) {
      const double v = (*cols[c].values)[static_cast<Eigen::Index>(e)];
      const double s1 = s + mesh.boundary_edges()[e].length;
      os << X(s) << ',' << Y(v) << ' ' << X(s1) << ',' << Y(v) << ' ';
      s = s1;
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - mr - 150 << "\" y=\"" << mt + 14 * (c + 1) << "\" font-family=\"sans-serif\" "
       << "font-size=\"11\" fill=\"" << colors[c % 4] << "\">" << cols[c].name << "</text>\n";
  }
  os << "</svg>\n";
  write_file(path, os.str());
}

json mesh_summary(const Mesh& mesh) {
  double h_boundary = 0.0;
  for (const auto& e : mesh.boundary_edges()) h_boundary = std::max(h_boundary, e.length);
  return {{"vertices", mesh.num_vertices()},       {"triangles", mesh.num_triangles()},
          {"boundary_edges", mesh.num_boundary_edges()}, {"perimeter", mesh.perimeter()},
          {"area", mesh.area()},                   {"h", mesh.max_edge_length()},
          {"h_boundary", h_boundary}};
}

std::string timestamp_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Problem construction.

double resolve_V0(const ProblemConfig& p, const Mesh& mesh) {
  const double V0 = p.V0 ? *p.V0 : p.V0_fraction * mesh.perimeter();
  if (!(V0 > 0.0) || !(V0 < mesh.perimeter())) {
    throw HypothesisError("V0 = " + fmt(V0) + " is infeasible, need 0 < V0 < perimeter = " + fmt(mesh.perimeter()));
  }
  return V0;
}

ProblemSpec build_problem(const ScenarioConfig& c, const Mesh& mesh) {
  const ProblemConfig& p = c.problem;
  ProblemSpec spec;
  spec.flavor = parse_flavor(p.flavor);
  spec.sense = parse_sense(p.sense);
  spec.f = ScalarField::constant(mesh, p.f);
  spec.V0 = resolve_V0(p, mesh);
  spec.state.solve.tol = p.solver_tol;
  spec.state.strict_source = p.strict_source;
  if (p.strict_source) check_source(spec.f, true);
  if (p.j == "power") {
    spec.j = CriterionJ::power(p.gamma);
  } else if (p.j == "concave_quadratic") {
    double a = p.a;
    if (a == 0.0) {
      a = 2.0 * (1.0 + estimate_U0(mesh, spec.f, spec.V0, 20, derive_seed(c.seed, 1000), spec.state));
    }
    spec.j = CriterionJ::concave_quadratic(a);
  }
  if (p.logistic) {
    LogisticData d;
    d.m = ScalarField::constant(mesh, p.m);
    d.newton_tol = p.newton_tol;
    d.max_newton = p.max_newton;
    spec.logistic = d;
  }
  validate(spec, mesh);
  return spec;
}

/// Indicator of a contiguous run of edges with total mass V0 (one fractional edge at the end).
BoundaryField arc_indicator(const Mesh& mesh, double V0) {
  const std::size_t n = mesh.num_boundary_edges();
  BoundaryField g = BoundaryField::constant(mesh, 0.0);
  for (std::size_t k = 0; k < n; ++k) g[k] = 2.0 - static_cast<double>(k) / static_cast<double>(n);
  return project(g, AdmissibleSpec::for_mesh(mesh, V0)).beta;
}

std::vector<int> parse_gamma(const json& g, const std::string& pointer, const Mesh& mesh) {
  std::vector<int> out;
  const std::size_t n = mesh.num_boundary_edges();
  if (g.is_array()) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g[i].is_number_integer() || g[i].get<long long>() < 0 || g[i].get<long long>() >= static_cast<long long>(n)) {
        config_error(pointer + "/" + std::to_string(i), "expected a boundary edge index in [0, " + std::to_string(n) + ")");
      }
      out.push_back(g[i].get<int>());
    }
  } else if (g.is_string()) {
    const std::string side = g.get<std::string>();
    Point dir;
    if (side == "bottom") dir = Point(0, -1);
    else if (side == "top") dir = Point(0, 1);
    else if (side == "left") dir = Point(-1, 0);
    else if (side == "right") dir = Point(1, 0);
    else if (side != "all") config_error(pointer, "expected bottom, top, left, right, all or an index list");
    for (std::size_t e = 0; e < n; ++e) {
      if (side == "all" || mesh.boundary_edges()[e].normal.dot(dir) > 1.0 - 1e-9) out.push_back(static_cast<int>(e));
    }
  } else {
    config_error(pointer, "expected a side name or an array of edge indices");
  }
  if (out.empty()) config_error(pointer, "selects no boundary edge");
  return out;
}

struct Result {
  json report = json::object();
  bool passed = true;
};

double rel_err(double approx, double exact) { return std::abs(approx - exact) / std::max(std::abs(exact), 1e-300); }

// ---------------------------------------------------------------------------
// Scenarios.

Result scenario_optimize(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir, int jobs) {
  Obj(c.params, "/params").allow({});
  const ProblemSpec spec = build_problem(c, mesh);
  const MultistartResult ms = multistart(spec, mesh, c.optimizer, c.starts, c.seed, jobs);
  const OptResult& best = ms.runs[ms.best];
  const GradientReport rep = gradient(spec, mesh, best.beta_star);
  const StructureReport st = kkt_residual(spec, mesh, best.beta_star);
  const double P = mesh.perimeter();

  write_history_csv(dir / "history.csv", best.history);
  write_edge_csv(dir / "beta.csv", mesh, {{"beta", &best.beta_star.values}, {"phi", &rep.phi.values}});
  write_fields_csv(dir / "fields.csv", mesh, {{"u", &rep.u.values}, {"p", &rep.p.values}});
  write_boundary_svg(dir / "boundary.svg", mesh, {{"beta", &best.beta_star.values}},
                     "optimized beta (" + to_string(spec.flavor) + ", " + to_string(spec.sense) + ")");

  Result r;
  json runs = json::array();
  for (std::size_t i = 0; i < ms.runs.size(); ++i) {
    runs.push_back({{"seed", ms.seeds[i]},
                    {"status", to_string(ms.runs[i].status)},
                    {"iterations", ms.runs[i].history.size() - 1},
                    {"value", ms.runs[i].value}});
  }
  const double c0 = spec.V0 / P;
  r.report = {{"value", best.value},
              {"status", to_string(best.status)},
              {"best_run", ms.best},
              {"lambda", st.lambda},
              {"kkt_residual", st.residual},
              {"intermediate_fraction", st.intermediate_length / P},
              {"zero_set_fraction", zero_set_measure(mesh, best.beta_star) / P},
              {"bangbang_fraction", st.bangbang_fraction},
              {"max_deviation_from_constant", (best.beta_star.values.array() - c0).abs().maxCoeff()},
              {"V0", spec.V0},
              {"runs", runs}};
  return r;
}

Result scenario_gradient_check(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir) {
  const Obj p(c.params, "/params");
  p.allow({"pairs", "tolerance", "second_tolerance", "eps", "eps2"});
  const int pairs = p.count("pairs", 20, 1);
  const double tol = p.positive("tolerance", 1e-4);
  const double tol2 = p.positive("second_tolerance", 1e-2);
  const double eps = p.positive("eps", 1e-3);
  const double eps2 = p.positive("eps2", 1e-3);
  ProblemSpec spec = build_problem(c, mesh);
  spec.state.solve.tol = std::min(spec.state.solve.tol, 1e-12);
  if (spec.logistic) spec.logistic->newton_tol = std::min(spec.logistic->newton_tol, 1e-12);
  const AdmissibleSpec adm = AdmissibleSpec::for_mesh(mesh, spec.V0);

  std::ostringstream csv;
  csv << "pair,adjoint,fd,rel_error,second_analytic,second_fd,second_rel_error\n";
  double worst = 0.0, worst2 = 0.0;
  for (int i = 0; i < pairs; ++i) {
    Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(i)));
    const BoundaryField beta = random_interior(adm, rng);
    const BoundaryField h = random_direction(adm, rng);
    const auto J = [&](double t) {
      const BoundaryField b(beta.values + t * h.values);
      return eval_criterion(spec, mesh, solve_state(spec, mesh, b));
    };
    const GradientReport rep = gradient(spec, mesh, beta);
    const double adjoint = directional_derivative(mesh, rep.phi, h);
    const double d1 = (J(eps) - J(-eps)) / (2.0 * eps);
    const double d2 = (J(0.5 * eps) - J(-0.5 * eps)) / eps;
    const double fd = (4.0 * d2 - d1) / 3.0;
    const double analytic2 = second_derivative(spec, mesh, beta, h);
    const double fd2 = (J(eps2) - 2.0 * rep.value + J(-eps2)) / (eps2 * eps2);
    const double e1 = rel_err(fd, adjoint), e2 = rel_err(fd2, analytic2);
    worst = std::max(worst, e1);
    worst2 = std::max(worst2, e2);
    csv << i << ',' << fmt(adjoint) << ',' << fmt(fd) << ',' << fmt(e1) << ',' << fmt(analytic2) << ',' << fmt(fd2)
        << ',' << fmt(e2) << '\n';
  }
  write_file(dir / "gradient.csv", csv.str());

  const BoundaryField beta0 = BoundaryField::constant(mesh, spec.V0 / mesh.perimeter());
  const GradientReport rep0 = gradient(spec, mesh, beta0);
  write_edge_csv(dir / "beta.csv", mesh, {{"beta", &beta0.values}, {"phi", &rep0.phi.values}});
  write_fields_csv(dir / "fields.csv", mesh, {{"u", &rep0.u.values}, {"p", &rep0.p.values}});
  write_boundary_svg(dir / "boundary.svg", mesh, {{"beta", &beta0.values}, {"phi", &rep0.phi.values}},
                     "gradient check: constant beta and phi");

  Result r;
  r.passed = worst <= tol && worst2 <= tol2;
  r.report = {{"pairs", pairs},
              {"max_rel_error", worst},
              {"tolerance", tol},
              {"max_second_rel_error", worst2},
              {"second_tolerance", tol2},
              {"eps", eps},
              {"eps2", eps2}};
  return r;
}

Result scenario_explicit_minimizer(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir, int jobs) {
  const Obj p(c.params, "/params");
  p.allow({"V0_ratio", "starts", "tolerance_factor"});
  const double ratio = p.positive("V0_ratio", 0.5);
  const int starts = p.count("starts", 3, 1);
  const double factor = p.positive("tolerance_factor", 5.0);

  StateOptions state;
  state.solve.tol = c.problem.solver_tol;
  const ScalarField f = ScalarField::constant(mesh, c.problem.f);
  check_source(f, true);
  const DirichletSolution d = solve_dirichlet(mesh, f, state);
  const Vector q = -d.flux.values;  // -d_nu v > 0
  if (q.minCoeff() <= 0.0) throw NumericalError("explicit minimizer: recovered flux -d_nu v is not positive on every edge");
  const AdmissibleSpec adm = AdmissibleSpec::for_mesh(mesh, 1.0);
  const double flux_total = adm.weights.dot(q);
  const double V0_omega = flux_total / q.maxCoeff();
  double V0 = ratio * V0_omega;
  if (c.problem.V0) V0 = *c.problem.V0;
  if (!(V0 > 0.0) || !(V0 < V0_omega)) {
    throw HypothesisError("explicit minimizer: V0 = " + fmt(V0) + " must lie in (0, V0_Omega) with V0_Omega = " +
                          fmt(V0_omega));
  }
  const BoundaryField beta_formula(q * (V0 / flux_total));
  const double lambda = flux_total / V0;
  const ScalarField u = solve_robin(mesh, beta_formula, f, state);
  const double state_error = (u.values - (d.v.values.array() + lambda).matrix()).cwiseAbs().maxCoeff();

  ProblemSpec spec;
  spec.flavor = Flavor::compliance;
  spec.sense = Sense::minimize;
  spec.f = f;
  spec.V0 = V0;
  spec.state = state;
  const MultistartResult ms = multistart(spec, mesh, c.optimizer, starts, c.seed, jobs);
  const AdmissibleSpec adm0 = AdmissibleSpec::for_mesh(mesh, V0);
  json dists = json::array();
  double worst = 0.0;
  for (const auto& run : ms.runs) {
    const double dist = weighted_norm(adm0, BoundaryField(run.beta_star.values - beta_formula.values));
    worst = std::max(worst, dist);
    dists.push_back(dist);
  }
  const OptResult& best = ms.runs[ms.best];
  const double h = mesh.max_edge_length();

  write_history_csv(dir / "history.csv", best.history);
  write_edge_csv(dir / "beta.csv", mesh, {{"beta_formula", &beta_formula.values}, {"beta_optimized", &best.beta_star.values}});
  const Vector closed_form = d.v.values.array() + lambda;
  write_fields_csv(dir / "fields.csv", mesh, {{"u", &u.values}, {"u_closed_form", &closed_form}, {"v_dirichlet", &d.v.values}});
  write_boundary_svg(dir / "boundary.svg", mesh,
                     {{"beta_formula", &beta_formula.values}, {"beta_optimized", &best.beta_star.values}},
                     "explicit compliance minimizer vs optimizer");

  Result r;
  r.passed = state_error <= factor * h && worst <= factor * h;
  r.report = {{"V0", V0},
              {"V0_omega", V0_omega},
              {"lambda", lambda},
              {"h", h},
              {"tolerance", factor * h},
              {"state_max_error", state_error},
              {"optimizer_distances", dists},
              {"max_optimizer_distance", worst},
              {"beta_formula_min", beta_formula.values.minCoeff()},
              {"beta_formula_max", beta_formula.values.maxCoeff()}};
  return r;
}

Result scenario_serrin(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir) {
  Obj(c.params, "/params").allow({});
  ScenarioConfig forced = c;
  forced.problem.f = 1.0;
  forced.problem.flavor = "compliance";
  forced.problem.sense = "minimize";
  forced.problem.logistic = false;
  const ProblemSpec spec = build_problem(forced, mesh);
  const BoundaryField beta = BoundaryField::constant(mesh, spec.V0 / mesh.perimeter());
  const StructureReport st = kkt_residual(spec, mesh, beta);
  double h_boundary = 0.0;
  for (const auto& e : mesh.boundary_edges()) h_boundary = std::max(h_boundary, e.length);
  const double threshold = h_boundary * std::abs(st.lambda);

  write_edge_csv(dir / "beta.csv", mesh, {{"beta", &beta.values}, {"phi", &st.phi.values}});
  const ScalarField u = solve_state(spec, mesh, beta);
  write_fields_csv(dir / "fields.csv", mesh, {{"u", &u.values}, {"p", &u.values}});
  write_boundary_svg(dir / "boundary.svg", mesh, {{"phi = u^2", &st.phi.values}}, "switch function at constant beta");

  Result r;
  r.report = {{"V0", spec.V0},
              {"lambda", st.lambda},
              {"kkt_residual", st.residual},
              {"relative_residual", st.residual / std::abs(st.lambda)},
              {"threshold", threshold},
              {"verdict", st.residual <= threshold ? "ball" : "non-ball"},
              {"source_forced_to_one", c.problem.f != 1.0}};
  return r;
}

Result scenario_alpha(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir) {
  const Obj p(c.params, "/params");
  p.allow({"gamma", "alphas", "relative_error", "trace_ratio"});
  const std::vector<int> gamma = parse_gamma(p.has("gamma") ? p.raw("gamma") : json("bottom"), p.at("gamma"), mesh);
  std::vector<double> alphas = {1, 4, 16, 64, 256, 1024};
  if (p.has("alphas")) {
    const json& a = p.raw("alphas");
    if (!a.is_array() || a.empty()) config_error(p.at("alphas"), "expected a non-empty array of numbers");
    alphas.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number() || !(a[i].get<double>() > 0.0)) config_error(p.at("alphas") + "/" + std::to_string(i), "expected a positive number");
      alphas.push_back(a[i].get<double>());
    }
  }
  const double rel_tol = p.positive("relative_error", 0.02);
  const double trace_ratio = p.positive("trace_ratio", 1e-3);
  StateOptions state;
  state.solve.tol = c.problem.solver_tol;
  const ScalarField f = ScalarField::constant(mesh, c.problem.f);
  const AlphaSweep sw = alpha_sweep(mesh, gamma, f, alphas, state);

  std::ostringstream csv;
  csv << "alpha,l2_error,relative_l2_error,h1_semi_error,energy,gamma_trace_sq\n";
  bool decreasing = true, energy_ok = true, trace_decreasing = true;
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    const AlphaRow& row = sw.rows[i];
    csv << fmt(row.alpha) << ',' << fmt(row.l2_error) << ',' << fmt(row.l2_error / sw.limit_l2_norm) << ','
        << fmt(row.h1_semi_error) << ',' << fmt(row.energy) << ',' << fmt(row.gamma_trace_sq) << '\n';
    const double slack = 1e-12 * std::abs(sw.limit_energy);
    if (row.energy > sw.limit_energy + slack) energy_ok = false;
    if (i > 0) {
      decreasing = decreasing && row.l2_error < sw.rows[i - 1].l2_error;
      trace_decreasing = trace_decreasing && row.gamma_trace_sq < sw.rows[i - 1].gamma_trace_sq;
      energy_ok = energy_ok && row.energy >= sw.rows[i - 1].energy - slack;
    }
  }
  write_file(dir / "alpha.csv", csv.str());
  const ScalarField u_last =
      solve_robin_coefficient(mesh, [&] {
        BoundaryField b = BoundaryField::constant(mesh, 0.0);
        for (int e : gamma) b[static_cast<std::size_t>(e)] = alphas.back();
        return b;
      }(), f, state);
  BoundaryField ind = BoundaryField::constant(mesh, 0.0);
  for (int e : gamma) ind[static_cast<std::size_t>(e)] = 1.0;
  write_edge_csv(dir / "beta.csv", mesh, {{"gamma_indicator", &ind.values}});
  write_fields_csv(dir / "fields.csv", mesh, {{"u_alpha_max", &u_last.values}, {"v_mixed", &sw.limit.values}});
  write_boundary_svg(dir / "boundary.svg", mesh, {{"1_Gamma", &ind.values}}, "Dirichlet part Gamma");

  const double final_rel = sw.rows.back().l2_error / sw.limit_l2_norm;
  const double trace_final_ratio = sw.rows.back().gamma_trace_sq / sw.rows.front().gamma_trace_sq;
  Result r;
  r.passed = decreasing && trace_decreasing && energy_ok && final_rel <= rel_tol && trace_final_ratio <= trace_ratio;
  r.report = {{"gamma_edges", gamma.size()},
              {"limit_l2_norm", sw.limit_l2_norm},
              {"limit_energy", sw.limit_energy},
              {"error_strictly_decreasing", decreasing},
              {"trace_strictly_decreasing", trace_decreasing},
              {"energy_nondecreasing_and_bounded", energy_ok},
              {"final_relative_error", final_rel},
              {"final_trace_ratio", trace_final_ratio}};
  return r;
}

Result scenario_steklov(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir) {
  const Obj p(c.params, "/params");
  p.allow({"count", "beta", "reference_tolerance"});
  const int count = p.count("count", 5, 1);
  const double bbar = p.has("beta") ? p.num("beta", 0.5) : resolve_V0(c.problem, mesh) / mesh.perimeter();
  if (!(bbar > 0.0 && bbar <= 1.0)) config_error(p.at("beta"), "expected a value in (0, 1]");
  const double ref_tol = p.positive("reference_tolerance", 3e-2);
  const BoundaryField beta = BoundaryField::constant(mesh, bbar);
  const EigPairs eigs = steklov_eigs(mesh, beta, count);

  const SparseMatrix Mb = boundary_mass(mesh, BoundaryField::constant(mesh, 1.0));
  double ortho = 0.0;
  for (int a = 0; a < count; ++a) {
    const Vector Ma = Mb * eigs.modes[static_cast<std::size_t>(a)].values;
    for (int b = 0; b < count; ++b) {
      const double g = eigs.modes[static_cast<std::size_t>(b)].values.dot(Ma);
      ortho = std::max(ortho, std::abs(g - (a == b ? 1.0 : 0.0)));
    }
  }
  const bool disk = c.domain.type == "disk";
  std::ostringstream csv;
  csv << (disk ? "k,sigma,reference\n" : "k,sigma\n");
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    csv << k << ',' << fmt(eigs.sigmas[static_cast<std::size_t>(k)]);
    if (disk) {
      const double ref = bbar + static_cast<double>((k + 1) / 2);
      worst = std::max(worst, std::abs(eigs.sigmas[static_cast<std::size_t>(k)] - ref));
      csv << ',' << fmt(ref);
    }
    csv << '\n';
  }
  write_file(dir / "steklov.csv", csv.str());
  write_edge_csv(dir / "beta.csv", mesh, {{"beta", &beta.values}});
  std::vector<Column> cols;
  std::vector<std::string> names;
  for (int k = 0; k < std::min(count, 4); ++k) names.push_back("phi_" + std::to_string(k));
  for (int k = 0; k < std::min(count, 4); ++k) cols.push_back({names[static_cast<std::size_t>(k)], &eigs.modes[static_cast<std::size_t>(k)].values});
  write_fields_csv(dir / "fields.csv", mesh, cols);
  write_boundary_svg(dir / "boundary.svg", mesh, {{"beta", &beta.values}}, "Steklov table coefficient");

  Result r;
  r.passed = ortho <= 1e-8 && (!disk || worst <= ref_tol);
  r.report = {{"beta", bbar},
              {"sigmas", eigs.sigmas},
              {"max_pencil_residual", eigs.max_residual},
              {"orthonormality_error", ortho}};
  if (disk) {
    r.report["max_reference_deviation"] = worst;
    r.report["reference_tolerance"] = ref_tol;
  }
  return r;
}

Result scenario_certificate(const ScenarioConfig& c, const Mesh& mesh, const fs::path& dir) {
  const Obj p(c.params, "/params");
  p.allow({"kind", "K", "sigma_target", "c_factor", "U0_samples"});
  const std::string kind = p.one_of("kind", "bangbang", {"bangbang", "relaxation"});
  Result r;
  if (kind == "bangbang") {
    const ProblemSpec spec = build_problem(c, mesh);
    const BoundaryField beta = BoundaryField::constant(mesh, spec.V0 / mesh.perimeter());
    int K = static_cast<int>(p.integer("K", -1));
    const double target = p.positive("sigma_target", 50.0);
    const int nb = static_cast<int>(mesh.boundary_vertices().size());
    if (K < 0) {
      const int avail = std::min(nb, static_cast<int>(mesh.num_boundary_edges()) - 1);
      const EigPairs all = steklov_eigs(mesh, beta, avail);
      for (int k = 0; k < avail && K < 0; ++k) {
        if (all.sigmas[static_cast<std::size_t>(k)] >= target) K = k;
      }
      if (K < 0) throw HypothesisError("certificate: no computed sigma_K reaches " + fmt(target) + ", refine the boundary");
    }
    const BangBangCertificate cert = bangbang_certificate(spec, mesh, beta, K, c.seed);
    const ScalarField u = solve_state(spec, mesh, beta);
    write_edge_csv(dir / "beta.csv", mesh, {{"beta", &beta.values}, {"h", &cert.h.values}});
    write_fields_csv(dir / "fields.csv", mesh, {{"u", &u.values}});
    write_boundary_svg(dir / "boundary.svg", mesh, {{"h", &cert.h.values}}, "high-frequency perturbation");
    r.passed = spec.sense == Sense::maximize || spec.flavor == Flavor::compliance ? cert.ddotJ > 0.0 : true;
    r.report = {{"kind", kind}, {"ddotJ", cert.ddotJ}, {"K", cert.K}, {"sigma_K", cert.sigma_K},
                {"support_edges", cert.support_size}, {"V0", spec.V0}};
  } else {
    const double V0 = resolve_V0(c.problem, mesh);
    const double c_factor = p.positive("c_factor", 2.0);
    const int samples = p.count("U0_samples", 20, 0);
    StateOptions state;
    state.solve.tol = c.problem.solver_tol;
    const ScalarField f = ScalarField::constant(mesh, c.problem.f);
    check_source(f, true);
    const BoundaryField beta = arc_indicator(mesh, V0);
    const double U0 = estimate_U0(mesh, f, V0, samples, c.seed, state);
    const RelaxationCertificate cert = relaxation_certificate(mesh, beta, f, U0, c_factor, state);
    const ScalarField u = solve_robin(mesh, beta, f, state);
    write_edge_csv(dir / "beta.csv", mesh, {{"beta", &beta.values}, {"h", &cert.h.values}});
    write_fields_csv(dir / "fields.csv", mesh, {{"u", &u.values}});
    write_boundary_svg(dir / "boundary.svg", mesh, {{"beta", &beta.values}, {"h", &cert.h.values}},
                       "bang-bang candidate and low-mode perturbation");
    r.passed = cert.ddotJ < 0.0;
    r.report = {{"kind", kind},     {"ddotJ", cert.ddotJ}, {"Kconst", cert.Kconst}, {"Lambda2", cert.Lambda2},
                {"C", cert.C},      {"a", cert.a},         {"U0_estimate", U0},      {"V0", V0},
                {"window_respected", cert.C * U0 < 1.0}};
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(const json& j, const std::string& pointer) {
  const Obj top(j, pointer);
  top.allow({"name", "scenario", "domain", "problem", "optimizer", "starts", "seed", "params"});
  ScenarioConfig c;
  c.name = top.str("name", "");
  c.kind = top.one_of("scenario", "optimize",
                      {"optimize", "verify_explicit_minimizer", "serrin_check", "alpha_sweep", "steklov_table",
                       "gradient_check", "certificate"});
  c.starts = top.count("starts", 5, 1);
  const long long seed = top.integer("seed", 0);
  if (seed < 0) config_error(top.at("seed"), "expected a nonnegative integer");
  c.seed = static_cast<std::uint64_t>(seed);

  {
    const Obj d(top.has("domain") ? top.raw("domain") : empty_object(), top.at("domain"));
    d.allow({"type", "n", "n_boundary", "n_rings", "path", "stretch"});
    c.domain.type = d.one_of("type", "square", {"square", "disk", "mesh_file"});
    c.domain.n = d.count("n", 16, 1);
    c.domain.n_boundary = d.count("n_boundary", 64, 3);
    c.domain.n_rings = d.count("n_rings", 16, 1);
    c.domain.path = d.str("path", "");
    if (c.domain.type == "mesh_file" && c.domain.path.empty()) config_error(d.at("path"), "required for mesh_file");
    if (d.has("stretch")) {
      const json& s = d.raw("stretch");
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number() || !(s[0].get<double>() > 0.0) ||
          !(s[1].get<double>() > 0.0)) {
        config_error(d.at("stretch"), "expected [sx, sy] with positive factors");
      }
      c.domain.stretch_x = s[0].get<double>();
      c.domain.stretch_y = s[1].get<double>();
    }
  }
  {
    const Obj p(top.has("problem") ? top.raw("problem") : empty_object(), top.at("problem"));
    p.allow({"flavor", "sense", "j", "f", "V0", "V0_fraction", "logistic", "strict_source", "solver_tol"});
    ProblemConfig& q = c.problem;
    q.flavor = p.one_of("flavor", "compliance", {"boundary", "distributed", "compliance"});
    q.sense = p.one_of("sense", "minimize", {"minimize", "maximize"});
    if (p.has("j")) {
      const json& jj = p.raw("j");
      if (jj.is_string()) {
        q.j = jj.get<std::string>();
        if (q.j != "identity" && q.j != "power" && q.j != "concave_quadratic") {
          config_error(p.at("j"), "'" + q.j + "' is not one of: identity, power, concave_quadratic");
        }
      } else {
        const Obj jo(jj, p.at("j"));
        jo.allow({"kind", "gamma", "a"});
        q.j = jo.one_of("kind", "identity", {"identity", "power", "concave_quadratic"});
        q.gamma = jo.positive("gamma", 2.0);
        if (q.j == "power" && q.gamma == 1.0) config_error(jo.at("gamma"), "gamma = 1 is the identity");
        q.a = jo.num("a", 0.0);
        if (q.a < 0.0) config_error(jo.at("a"), "expected a >= 0 (0 selects the default)");
      }
    }
    q.f = p.num("f", 1.0);
    if (p.has("V0")) q.V0 = p.positive("V0", 1.0);
    q.V0_fraction = p.positive("V0_fraction", 0.3);
    if (q.V0_fraction >= 1.0) config_error(p.at("V0_fraction"), "expected a value in (0, 1)");
    if (p.has("logistic")) {
      const json& l = p.raw("logistic");
      if (l.is_boolean()) {
        q.logistic = l.get<bool>();
      } else {
        const Obj lo(l, p.at("logistic"));
        lo.allow({"m", "newton_tol", "max_newton"});
        q.logistic = true;
        q.m = lo.positive("m", 1.0);
        q.newton_tol = lo.positive("newton_tol", 1e-10);
        q.max_newton = lo.count("max_newton", 50, 1);
      }
    }
    if (q.logistic && q.flavor == "compliance") config_error(p.at("flavor"), "compliance is not defined for the logistic state");
    q.strict_source = p.boolean("strict_source", false);
    q.solver_tol = p.positive("solver_tol", 1e-10);
    if (q.solver_tol > 1e-6) config_error(p.at("solver_tol"), "expected a tolerance <= 1e-6");
  }
  {
    const Obj o(top.has("optimizer") ? top.raw("optimizer") : empty_object(), top.at("optimizer"));
    o.allow({"max_iter", "step0", "armijo_c", "backtrack", "max_halvings", "tol", "bb_steps"});
    c.optimizer.max_iter = o.count("max_iter", 500, 0);
    c.optimizer.step0 = o.positive("step0", 1.0);
    c.optimizer.armijo_c = o.positive("armijo_c", 1e-4);
    c.optimizer.backtrack = o.positive("backtrack", 0.5);
    if (c.optimizer.backtrack >= 1.0) config_error(o.at("backtrack"), "expected a factor in (0, 1)");
    c.optimizer.max_halvings = o.count("max_halvings", 40, 0);
    c.optimizer.tol = o.positive("tol", 1e-8);
    c.optimizer.bb_steps = o.boolean("bb_steps", true);
  }
  if (top.has("params")) {
    if (!top.raw("params").is_object()) config_error(top.at("params"), "expected an object");
    c.params = top.raw("params");
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json problem = {{"flavor", c.problem.flavor},
                  {"sense", c.problem.sense},
                  {"j", {{"kind", c.problem.j}, {"gamma", c.problem.gamma}, {"a", c.problem.a}}},
                  {"f", c.problem.f},
                  {"V0_fraction", c.problem.V0_fraction},
                  {"strict_source", c.problem.strict_source},
                  {"solver_tol", c.problem.solver_tol}};
  problem["V0"] = c.problem.V0 ? json(*c.problem.V0) : json(nullptr);
  if (c.problem.logistic) {
    problem["logistic"] = {{"m", c.problem.m}, {"newton_tol", c.problem.newton_tol}, {"max_newton", c.problem.max_newton}};
  } else {
    problem["logistic"] = false;
  }
  return {{"name", c.name},
          {"scenario", c.kind},
          {"domain",
           {{"type", c.domain.type},
            {"n", c.domain.n},
            {"n_boundary", c.domain.n_boundary},
            {"n_rings", c.domain.n_rings},
            {"path", c.domain.path},
            {"stretch", {c.domain.stretch_x, c.domain.stretch_y}}}},
          {"problem", problem},
          {"optimizer",
           {{"max_iter", c.optimizer.max_iter},
            {"step0", c.optimizer.step0},
            {"armijo_c", c.optimizer.armijo_c},
            {"backtrack", c.optimizer.backtrack},
            {"max_halvings", c.optimizer.max_halvings},
            {"tol", c.optimizer.tol},
            {"bb_steps", c.optimizer.bb_steps}}},
          {"starts", c.starts},
          {"seed", c.seed},
          {"params", c.params}};
}

Mesh build_mesh(const DomainConfig& d) {
  Mesh mesh;
  if (d.type == "square") mesh = generate_square(d.n);
  else if (d.type == "disk") mesh = generate_disk(d.n_boundary, d.n_rings);
  else if (d.type == "mesh_file") mesh = load_mesh_file(d.path);
  else throw InputError("unknown domain type '" + d.type + "'");
  if (d.stretch_x != 1.0 || d.stretch_y != 1.0) mesh = stretch(mesh, d.stretch_x, d.stretch_y);
  return mesh;
}

ScenarioOutcome run_scenario(const ScenarioConfig& config, const fs::path& out_dir, int jobs) {
  ScenarioOutcome out;
  out.name = config.name;
  try {
    fs::create_directories(out_dir);
    const Mesh mesh = build_mesh(config.domain);
    json run = {{"tool", "robinopt"},
                {"version", kVersion},
                {"config", to_json(config)},
                {"mesh", mesh_summary(mesh)},
                {"seed", config.seed},
                {"norm_convention", "weighted by boundary edge lengths: ||g||^2 = sum_e L_e g_e^2"},
                {"metadata", {{"started_at", timestamp_utc()}}}};
    write_json(out_dir / "run.json", run);

    Result r;
    if (config.kind == "optimize") r = scenario_optimize(config, mesh, out_dir, jobs);
    else if (config.kind == "gradient_check") r = scenario_gradient_check(config, mesh, out_dir);
    else if (config.kind == "verify_explicit_minimizer") r = scenario_explicit_minimizer(config, mesh, out_dir, jobs);
    else if (config.kind == "serrin_check") r = scenario_serrin(config, mesh, out_dir);
    else if (config.kind == "alpha_sweep") r = scenario_alpha(config, mesh, out_dir);
    else if (config.kind == "steklov_table") r = scenario_steklov(config, mesh, out_dir);
    else if (config.kind == "certificate") r = scenario_certificate(config, mesh, out_dir);
    else throw InputError("unknown scenario '" + config.kind + "'");

    out.passed = r.passed;
    out.report = r.report;
    out.exit_code = r.passed ? kExitOk : kExitVerification;
    out.message = r.passed ? "ok" : "verification failed";
  } catch (const InputError& e) {
    out = {config.name, kExitConfig, false, e.what(), json::object()};
  } catch (const HypothesisError& e) {
    out = {config.name, kExitConfig, false, e.what(), json::object()};
  } catch (const json::exception& e) {
    out = {config.name, kExitConfig, false, std::string("config error: ") + e.what(), json::object()};
  } catch (const std::exception& e) {
    out = {config.name, kExitNumerical, false, e.what(), json::object()};
  }
  json report = out.report;
  report["scenario"] = config.kind;
  report["passed"] = out.passed;
  report["exit_code"] = out.exit_code;
  report["message"] = out.message;
  out.report = report;
  try {
    fs::create_directories(out_dir);
    write_json(out_dir / "report.json", report);
  } catch (const std::exception&) {
  }
  return out;
}

std::vector<ScenarioOutcome> run_config(const json& config, const fs::path& out_dir, int jobs,
                                        std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) config_error("", "expected an object");
  jobs = std::max(1, jobs);

  struct Item {
    std::string name;
    std::string pointer;
    json raw;
  };
  std::vector<Item> items;
  fs::path base = out_dir;
  const bool batch = config.contains("scenarios");
  if (batch) {
    const json& list = config.at("scenarios");
    if (!list.is_array() || list.empty()) config_error("/scenarios", "expected a non-empty array");
    json shared = config;
    shared.erase("scenarios");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_object()) config_error("/scenarios/" + std::to_string(i), "expected an object");
      json merged = shared;
      merged.merge_patch(list[i]);
      std::string name = list[i].value("name", "scenario_" + std::to_string(i));
      if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
        config_error("/scenarios/" + std::to_string(i) + "/name", "invalid scenario name");
      }
      if (!names.insert(name).second) config_error("/scenarios/" + std::to_string(i) + "/name", "duplicate name");
      merged["name"] = name;
      items.push_back({name, "/scenarios/" + std::to_string(i), merged});
    }
  } else {
    items.push_back({config.value("name", std::string()), "", config});
  }

  std::vector<ScenarioOutcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};
  const int inner_jobs = batch ? 1 : jobs;
  const auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const fs::path dir = batch ? base / items[i].name : base;
      try {
        ScenarioConfig c = parse_scenario(items[i].raw, items[i].pointer);
        if (seed_override) c.seed = *seed_override;
        outcomes[i] = run_scenario(c, dir, inner_jobs);
      } catch (const std::exception& e) {
        outcomes[i] = {items[i].name, kExitConfig, false, e.what(), json::object()};
      }
    }
  };
  const int n_threads = batch ? std::min<int>(jobs, static_cast<int>(items.size())) : 1;
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return outcomes;
}

int combined_exit_code(const std::vector<ScenarioOutcome>& outcomes) {
  int code = kExitOk;
  for (const auto& o : outcomes) code = std::max(code, o.exit_code);
  return code;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config parse error in " + path.string() + ": " + e.what());
  }
}

}  // namespace robinopt
