#pragma once

#include <vector>

#include "robinopt/assembly.hpp"
#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"

namespace robinopt {

struct StateOptions {
  SolveOptions solve;
  /// Reject sources violating f >= 0, f != 0.
  bool strict_source = false;
};

/// Robin state: (K + M_d(beta)) u = M f.
///
/// beta must take values in [0, 1] with positive boundary mass.
ScalarField solve_robin(const Mesh& mesh, const BoundaryField& beta, const ScalarField& f,
                        const StateOptions& opts = {});

/// Same system for an arbitrary nonnegative edge coefficient (penalty terms such as alpha 1_Gamma).
ScalarField solve_robin_coefficient(const Mesh& mesh, const BoundaryField& coeff, const ScalarField& f,
                                    const StateOptions& opts = {});

struct DirichletSolution {
  ScalarField v;
  /// Outward normal derivative per boundary edge, recovered from the boundary residual.
  BoundaryField flux;
};

/// Homogeneous Dirichlet problem -Lap v = f, with variationally consistent flux recovery.
DirichletSolution solve_dirichlet(const Mesh& mesh, const ScalarField& f, const StateOptions& opts = {});

/// Mixed problem: v = 0 on the vertices of the listed edges, homogeneous Neumann elsewhere.
ScalarField solve_mixed(const Mesh& mesh, const std::vector<int>& gamma_edges, const ScalarField& f,
                        const StateOptions& opts = {});

/// Harmonic z with d_nu z + beta z = g on the boundary.
ScalarField solve_robin_boundary_source(const Mesh& mesh, const BoundaryField& beta, const BoundaryField& g,
                                        const StateOptions& opts = {});

/// Resource density and Newton controls for -Lap y = y (m - y).
struct LogisticData {
  ScalarField m;
  double newton_tol = 1e-10;
  int max_newton = 50;
  int max_halvings = 30;
};

struct LogisticStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Positive steady state of the logistic equation with Robin boundary conditions.
///
/// The reaction term uses vertex quadrature, so the Newton Jacobian
/// K + M_d(beta) - diag(w (m - 2y)) is exact and symmetric (w = lumped mass).
ScalarField solve_logistic(const Mesh& mesh, const BoundaryField& beta, const LogisticData& data,
                           const StateOptions& opts = {}, LogisticStats* stats = nullptr);

/// Discrete residual (K + M_d(beta)) y - w y (m - y).
Vector logistic_residual(const Mesh& mesh, const BoundaryField& beta, const LogisticData& data, const Vector& y);

/// Linearized operator K + M_d(beta) - diag(w (m - 2y)).
SparseMatrix logistic_jacobian(const Mesh& mesh, const BoundaryField& beta, const LogisticData& data,
                               const Vector& y);

/// Smallest eigenvalue mu of (K - M_W + M_d(beta)) x = mu M x, W = m - 2y, by shifted inverse iteration.
double stability_eigenvalue(const Mesh& mesh, const BoundaryField& beta, const ScalarField& y,
                            const LogisticData& data);

/// Smallest eigenvalue of A x = mu M x by shifted inverse iteration; the shift must make A + shift M definite.
double smallest_generalized_eigenvalue(const SparseMatrix& A, const SparseMatrix& M, double shift = 0.0);

}  // namespace robinopt
