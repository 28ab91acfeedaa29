#include "robinopt/criteria.hpp"

#include <cmath>
#include <sstream>

#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"

namespace robinopt {

CriterionJ CriterionJ::power(double gamma) {
  if (!(gamma > 0.0) || gamma == 1.0) throw InputError("power criterion: gamma must be > 0 and != 1");
  return CriterionJ(Kind::power, gamma);
}

CriterionJ CriterionJ::concave_quadratic(double a) {
  if (!(a > 0.0)) throw InputError("concave_quadratic criterion: a must be > 0");
  return CriterionJ(Kind::concave_quadratic, a);
}

double CriterionJ::j(double u) const {
  switch (kind_) {
    case Kind::identity: return u;
    case Kind::power: return std::pow(u, param_);
    case Kind::concave_quadratic: return -0.5 * u * u + 0.5 * param_ * u;
  }
  return 0.0;
}

double CriterionJ::dj(double u) const {
  switch (kind_) {
    case Kind::identity: return 1.0;
    case Kind::power: return param_ * std::pow(u, param_ - 1.0);
    case Kind::concave_quadratic: return 0.5 * param_ - u;
  }
  return 0.0;
}

double CriterionJ::d2j(double u) const {
  switch (kind_) {
    case Kind::identity: return 0.0;
    case Kind::power: return param_ * (param_ - 1.0) * std::pow(u, param_ - 2.0);
    case Kind::concave_quadratic: return -1.0;
  }
  return 0.0;
}

std::string CriterionJ::name() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::identity: return "identity";
    case Kind::power: os << "power(" << param_ << ")"; break;
    case Kind::concave_quadratic: os << "concave_quadratic(" << param_ << ")"; break;
  }
  return os.str();
}

void CriterionJ::check_window(double u_max) const {
  if (kind_ != Kind::concave_quadratic || !enforce_window) return;
  if (!(u_max < 0.5 * param_)) {
    std::ostringstream os;
    os << "criterion window violated: j'(u) <= 0 reached at max u = " << u_max << " (need u < a/2 = "
       << 0.5 * param_ << ")";
    throw HypothesisError(os.str());
  }
}

std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::boundary: return "boundary";
    case Flavor::distributed: return "distributed";
    case Flavor::compliance: return "compliance";
  }
  return "?";
}

std::string to_string(Sense s) { return s == Sense::maximize ? "maximize" : "minimize"; }

Flavor parse_flavor(const std::string& s) {
  if (s == "boundary") return Flavor::boundary;
  if (s == "distributed") return Flavor::distributed;
  if (s == "compliance") return Flavor::compliance;
  throw InputError("unknown flavor '" + s + "' (expected boundary, distributed or compliance)");
}

Sense parse_sense(const std::string& s) {
  if (s == "maximize" || s == "max") return Sense::maximize;
  if (s == "minimize" || s == "min") return Sense::minimize;
  throw InputError("unknown sense '" + s + "' (expected maximize or minimize)");
}

void validate(const ProblemSpec& spec, const Mesh& mesh) {
  if (spec.f.size() != mesh.num_vertices()) throw InputError("problem: source f has wrong size for the mesh");
  if (!(spec.V0 > 0.0) || !(spec.V0 < mesh.perimeter())) {
    std::ostringstream os;
    os << "problem: V0 = " << spec.V0 << " must lie in (0, perimeter = " << mesh.perimeter() << ")";
    throw HypothesisError(os.str());
  }
  if (spec.logistic) {
    if (spec.flavor == Flavor::compliance) throw InputError("problem: compliance is not defined for the logistic state");
    if (spec.logistic->m.size() != mesh.num_vertices()) throw InputError("problem: m has wrong size for the mesh");
  }
}

ScalarField solve_state(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta) {
  if (spec.logistic) return solve_logistic(mesh, beta, *spec.logistic, spec.state);
  return solve_robin(mesh, beta, spec.f, spec.state);
}

double eval_criterion(const ProblemSpec& spec, const Mesh& mesh, const ScalarField& u) {
  if (u.size() != mesh.num_vertices()) throw InputError("eval_criterion: state has wrong size");
  if (spec.flavor == Flavor::compliance) return load_vector(mesh, spec.f, LoadOptions{}).dot(u.values);
  spec.j.check_window(u.values.maxCoeff());
  const Vector ju = u.values.unaryExpr([&](double x) { return spec.j.j(x); });
  const Vector w = spec.flavor == Flavor::boundary ? boundary_weights(mesh) : lumped_mass(mesh);
  return w.dot(ju);
}

std::pair<double, double> compliance_energy_identity(const Mesh& mesh, const BoundaryField& beta,
                                                     const ScalarField& f, const StateOptions& opts) {
  const ScalarField u = solve_robin(mesh, beta, f, opts);
  const Vector F = load_vector(mesh, f, LoadOptions{});
  const Vector& x = u.values;
  const double energy =
      0.5 * x.dot(stiffness(mesh) * x) + 0.5 * x.dot(boundary_mass(mesh, beta) * x) - F.dot(x);
  return {F.dot(x), -2.0 * energy};
}

}  // namespace robinopt
