#include "robinopt/adjoint.hpp"

#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"
#include "robinopt/state.hpp"

namespace robinopt {

namespace {

Vector criterion_weights(const ProblemSpec& spec, const Mesh& mesh) {
  return spec.flavor == Flavor::boundary ? boundary_weights(mesh) : lumped_mass(mesh);
}

SparseMatrix state_operator(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                            const ScalarField& u) {
  if (spec.logistic) return logistic_jacobian(mesh, beta, *spec.logistic, u.values);
  return stiffness(mesh) + boundary_mass(mesh, beta);
}

Vector solve_state_operator(const ProblemSpec& spec, const SparseMatrix& A, const Vector& rhs) {
  try {
    return solve_spd(A, rhs, spec.state.solve);
  } catch (const NumericalError& e) {
    if (spec.logistic) {
      throw HypothesisError(std::string("linearized logistic operator is not positive definite (mu_beta <= 0): ") +
                            e.what());
    }
    throw;
  }
}

}  // namespace

ScalarField adjoint_state(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                          const ScalarField& u) {
  if (spec.flavor == Flavor::compliance) return u;
  const Vector dj = u.values.unaryExpr([&](double x) { return spec.j.dj(x); });
  const Vector rhs = criterion_weights(spec, mesh).cwiseProduct(dj);
  return ScalarField(solve_state_operator(spec, state_operator(spec, mesh, beta, u), rhs));
}

double multiplier_estimate(const Mesh& mesh, const BoundaryField& beta, const BoundaryField& phi, double eps) {
  const auto& edges = mesh.boundary_edges();
  double num = 0.0, den = 0.0, num_all = 0.0, den_all = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double L = edges[e].length;
    num_all += L * phi[e];
    den_all += L;
    if (beta[e] > eps && beta[e] < 1.0 - eps) {
      num += L * phi[e];
      den += L;
    }
  }
  return den > 0.0 ? num / den : num_all / den_all;
}

GradientReport gradient(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta) {
  GradientReport r;
  r.u = solve_state(spec, mesh, beta);
  r.value = eval_criterion(spec, mesh, r.u);
  r.p = adjoint_state(spec, mesh, beta, r.u);
  r.phi = edge_product_mean(mesh, r.u.values, r.p.values);
  r.lambda = multiplier_estimate(mesh, beta, r.phi);
  return r;
}

double directional_derivative(const Mesh& mesh, const BoundaryField& phi, const BoundaryField& h) {
  double s = 0.0;
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) s += edges[e].length * h[e] * phi[e];
  return -s;
}

ScalarField sensitivity(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                        const ScalarField& u, const BoundaryField& h) {
  const Vector rhs = -(boundary_mass(mesh, h) * u.values);
  return ScalarField(solve_state_operator(spec, state_operator(spec, mesh, beta, u), rhs));
}

double second_derivative(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                         const BoundaryField& h) {
  const ScalarField u = solve_state(spec, mesh, beta);
  const ScalarField p = adjoint_state(spec, mesh, beta, u);
  const ScalarField ud = sensitivity(spec, mesh, beta, u, h);
  double value = -2.0 * ud.values.dot(boundary_mass(mesh, h) * p.values);
  if (spec.flavor != Flavor::compliance) {
    const Vector w = criterion_weights(spec, mesh);
    for (Eigen::Index i = 0; i < w.size(); ++i) value += w[i] * spec.j.d2j(u.values[i]) * ud.values[i] * ud.values[i];
  }
  if (spec.logistic) {
    // Second derivative of the reaction y (m - y) is -2.
    const Vector w = lumped_mass(mesh);
    value -= 2.0 * (w.array() * p.values.array() * ud.values.array().square()).sum();
  }
  return value;
}

}  // namespace robinopt
