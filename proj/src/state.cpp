#include "robinopt/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "robinopt/error.hpp"

namespace robinopt {

namespace {

void check_edge_field(const Mesh& mesh, const BoundaryField& beta, const char* who) {
  if (beta.size() != mesh.num_boundary_edges()) {
    throw InputError(std::string(who) + ": boundary field has " + std::to_string(beta.size()) + " values for " +
                     std::to_string(mesh.num_boundary_edges()) + " edges");
  }
}

void check_source_size(const Mesh& mesh, const ScalarField& f, const char* who) {
  if (f.size() != mesh.num_vertices()) throw InputError(std::string(who) + ": source has wrong size");
}

SparseMatrix robin_operator(const Mesh& mesh, const BoundaryField& coeff) {
  return stiffness(mesh) + boundary_mass(mesh, coeff);
}

/// Solves A_FF x_F = b_F - A_FD * 0 for the free vertices, zero elsewhere.
Vector solve_with_zero_dirichlet(const Mesh& mesh, const SparseMatrix& A, const Vector& b,
                                 const std::vector<bool>& fixed, const SolveOptions& opts) {
  std::vector<int> free;
  for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) {
    if (!fixed[static_cast<std::size_t>(v)]) free.push_back(v);
  }
  Vector x = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  if (free.empty()) return x;
  const SparseMatrix Aff = restrict_matrix(A, free, free);
  Vector bf(static_cast<Eigen::Index>(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) bf[static_cast<Eigen::Index>(i)] = b[free[i]];
  const Vector xf = solve_spd(Aff, bf, opts);
  for (std::size_t i = 0; i < free.size(); ++i) x[free[i]] = xf[static_cast<Eigen::Index>(i)];
  return x;
}

/// Symmetric solve that tolerates mildly indefinite Newton matrices.
Vector newton_solve(const SparseMatrix& J, const Vector& rhs, const SolveOptions& opts) {
  try {
    return solve_spd(J, rhs, opts);
  } catch (const NumericalError&) {
    Eigen::SparseMatrix<double> Jc(J);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(Jc);
    if (lu.info() != Eigen::Success) throw NumericalError("logistic Newton: singular Jacobian");
    return lu.solve(rhs);
  }
}

}  // namespace

ScalarField solve_robin_coefficient(const Mesh& mesh, const BoundaryField& coeff, const ScalarField& f,
                                    const StateOptions& opts) {
  check_edge_field(mesh, coeff, "solve_robin");
  check_source_size(mesh, f, "solve_robin");
  if (coeff.values.size() > 0 && coeff.values.minCoeff() < 0.0) {
    throw HypothesisError("solve_robin: negative boundary coefficient");
  }
  if (!(boundary_integral(mesh, coeff) > 0.0)) {
    throw HypothesisError("solve_robin: singular system, the boundary coefficient has zero mass (V0 must be > 0)");
  }
  const Vector F = load_vector(mesh, f, LoadOptions{opts.strict_source});
  return ScalarField(solve_spd(robin_operator(mesh, coeff), F, opts.solve));
}

ScalarField solve_robin(const Mesh& mesh, const BoundaryField& beta, const ScalarField& f,
                        const StateOptions& opts) {
  check_edge_field(mesh, beta, "solve_robin");
  constexpr double slack = 1e-12;
  if (beta.values.size() > 0 && (beta.values.minCoeff() < -slack || beta.values.maxCoeff() > 1.0 + slack)) {
    throw HypothesisError("solve_robin: beta must take values in [0, 1]");
  }
  return solve_robin_coefficient(mesh, beta, f, opts);
}

DirichletSolution solve_dirichlet(const Mesh& mesh, const ScalarField& f, const StateOptions& opts) {
  check_source_size(mesh, f, "solve_dirichlet");
  const SparseMatrix K = stiffness(mesh);
  const Vector F = load_vector(mesh, f, LoadOptions{opts.strict_source});
  std::vector<bool> fixed(mesh.num_vertices(), false);
  for (int v : mesh.boundary_vertices()) fixed[static_cast<std::size_t>(v)] = true;

  DirichletSolution out;
  out.v = ScalarField(solve_with_zero_dirichlet(mesh, K, F, fixed, opts.solve));
  // Boundary rows of K v - F approximate \int d_nu v phi_i.
  const Vector residual = K * out.v.values - F;
  out.flux = BoundaryField::constant(mesh, 0.0);
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out.flux[e] = 0.5 * (residual[edges[e].v[0]] + residual[edges[e].v[1]]) / edges[e].length;
  }
  return out;
}

ScalarField solve_mixed(const Mesh& mesh, const std::vector<int>& gamma_edges, const ScalarField& f,
                        const StateOptions& opts) {
  check_source_size(mesh, f, "solve_mixed");
  if (gamma_edges.empty()) throw HypothesisError("solve_mixed: Dirichlet part Gamma is empty (no uniqueness)");
  std::vector<bool> fixed(mesh.num_vertices(), false);
  for (int e : gamma_edges) {
    if (e < 0 || static_cast<std::size_t>(e) >= mesh.num_boundary_edges()) {
      throw InputError("solve_mixed: boundary edge index " + std::to_string(e) + " out of range");
    }
    for (int v : mesh.boundary_edges()[static_cast<std::size_t>(e)].v) fixed[static_cast<std::size_t>(v)] = true;
  }
  const Vector F = load_vector(mesh, f, LoadOptions{opts.strict_source});
  return ScalarField(solve_with_zero_dirichlet(mesh, stiffness(mesh), F, fixed, opts.solve));
}

ScalarField solve_robin_boundary_source(const Mesh& mesh, const BoundaryField& beta, const BoundaryField& g,
                                        const StateOptions& opts) {
  check_edge_field(mesh, beta, "solve_robin_boundary_source");
  check_edge_field(mesh, g, "solve_robin_boundary_source");
  if (beta.values.minCoeff() < 0.0 || !(boundary_integral(mesh, beta) > 0.0)) {
    throw HypothesisError("solve_robin_boundary_source: beta must be nonnegative with positive mass");
  }
  return ScalarField(solve_spd(robin_operator(mesh, beta), boundary_load(mesh, g), opts.solve));
}

Vector logistic_residual(const Mesh& mesh, const BoundaryField& beta, const LogisticData& data, const Vector& y) {
  const Vector w = lumped_mass(mesh);
  return robin_operator(mesh, beta) * y - (w.array() * y.array() * (data.m.values - y).array()).matrix();
}

SparseMatrix logistic_jacobian(const Mesh& mesh, const BoundaryField& beta, const LogisticData& data,
                               const Vector& y) {
  const Vector reaction = lumped_mass(mesh).cwiseProduct(data.m.values - 2.0 * y);
  SparseMatrix J = robin_operator(mesh, beta);
  for (Eigen::Index i = 0; i < J.rows(); ++i) J.coeffRef(i, i) -= reaction[i];
  return J;
}

ScalarField solve_logistic(const Mesh& mesh, const BoundaryField& beta, const LogisticData& data,
                           const StateOptions& opts, LogisticStats* stats) {
  check_edge_field(mesh, beta, "solve_logistic");
  if (data.m.size() != mesh.num_vertices()) throw InputError("solve_logistic: m has wrong size");
  const double m_max = data.m.values.maxCoeff();
  if (!(m_max > 0.0)) throw HypothesisError("solve_logistic: m must be positive somewhere");
  const Vector w = lumped_mass(mesh);
  const double m_mass = w.dot(data.m.values);
  const double v0 = boundary_integral(mesh, beta);
  if (!(m_mass > v0)) {
    throw HypothesisError("solve_logistic: requires \\int m > \\int beta = V0 (got " + std::to_string(m_mass) +
                          " <= " + std::to_string(v0) + ")");
  }
  if (!(v0 > 0.0)) throw HypothesisError("solve_logistic: beta has zero boundary mass");

  const SparseMatrix A = robin_operator(mesh, beta);
  const auto residual = [&](const Vector& y) -> Vector {
    return A * y - (w.array() * y.array() * (data.m.values - y).array()).matrix();
  };

  Vector y = data.m.values.cwiseMax(1e-6 * m_max);
  Vector R = residual(y);
  double rnorm = R.norm();
  int it = 0;
  for (; it < data.max_newton && rnorm > data.newton_tol; ++it) {
    SparseMatrix J = A;
    const Vector reaction = w.cwiseProduct(data.m.values - 2.0 * y);
    for (Eigen::Index i = 0; i < J.rows(); ++i) J.coeffRef(i, i) -= reaction[i];
    const Vector step = newton_solve(J, -R, opts.solve);

    double t = 1.0;
    Vector trial = y + step;
    Vector R_trial = residual(trial);
    int halvings = 0;
    while (!(R_trial.norm() < rnorm) && halvings < data.max_halvings) {
      t *= 0.5;
      trial = y + t * step;
      R_trial = residual(trial);
      ++halvings;
    }
    if (!(R_trial.norm() < rnorm)) {
      throw NumericalError("solve_logistic: damping failed at Newton iteration " + std::to_string(it) +
                           ", residual " + std::to_string(rnorm));
    }
    y = std::move(trial);
    R = std::move(R_trial);
    rnorm = R.norm();
  }
  if (stats) *stats = LogisticStats{it, rnorm};
  if (rnorm > data.newton_tol) {
    throw NumericalError("solve_logistic: Newton did not converge in " + std::to_string(data.max_newton) +
                         " iterations, residual " + std::to_string(rnorm));
  }
  if (y.maxCoeff() <= 1e-8 * m_max) {
    throw NumericalError("solve_logistic: converged to the trivial branch y = 0");
  }
  return ScalarField(std::move(y));
}

double smallest_generalized_eigenvalue(const SparseMatrix& A, const SparseMatrix& M, double shift) {
  using ColMajor = Eigen::SparseMatrix<double>;
  const ColMajor B = ColMajor(A) + shift * ColMajor(M);
  Eigen::SimplicialLLT<ColMajor> llt(B);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("smallest_generalized_eigenvalue: shifted operator is not positive definite");
  }
  Vector x = Vector::Ones(A.rows());
  x /= std::sqrt(x.dot(M * x));
  double mu = x.dot(A * x);
  for (int it = 0; it < 5000; ++it) {
    Vector next = llt.solve(M * x);
    next /= std::sqrt(next.dot(M * next));
    const double mu_next = next.dot(A * next);
    x = std::move(next);
    if (it > 2 && std::abs(mu_next - mu) <= 1e-14 * std::max(1.0, std::abs(mu_next))) return mu_next;
    mu = mu_next;
  }
  throw NumericalError("smallest_generalized_eigenvalue: inverse iteration did not converge");
}

double stability_eigenvalue(const Mesh& mesh, const BoundaryField& beta, const ScalarField& y,
                            const LogisticData& data) {
  if (y.size() != mesh.num_vertices()) throw InputError("stability_eigenvalue: state has wrong size");
  const SparseMatrix J = logistic_jacobian(mesh, beta, data, y.values);
  const SparseMatrix M = domain_mass(mesh);
  try {
    return smallest_generalized_eigenvalue(J, M, 0.0);
  } catch (const NumericalError&) {
    // Lumped mass is bounded by 4x the consistent one, so this shift makes J + shift M definite.
    const double w_max = std::max(0.0, (data.m.values - 2.0 * y.values).maxCoeff());
    const double shift = 4.0 * w_max + 1.0;
    return smallest_generalized_eigenvalue(J, M, shift) - shift;
  }
}

}  // namespace robinopt
