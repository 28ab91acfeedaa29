#pragma once

#include "robinopt/criteria.hpp"
#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"

namespace robinopt {

struct GradientReport {
  /// Edge means of u p (u^2 for compliance); dJ[h] = -sum_e L_e h_e phi_e.
  BoundaryField phi;
  double value = 0.0;
  /// L_e-weighted mean of phi over edges with eps < beta < 1 - eps (all edges if none).
  double lambda = 0.0;
  ScalarField u;
  ScalarField p;
};

/// Adjoint state p. For compliance p = u; the logistic case solves with the linearized operator.
ScalarField adjoint_state(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                          const ScalarField& u);

GradientReport gradient(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta);

/// -sum_e L_e h_e phi_e.
double directional_derivative(const Mesh& mesh, const BoundaryField& phi, const BoundaryField& h);

/// Weighted mean of phi over the eps-interior edges of beta.
double multiplier_estimate(const Mesh& mesh, const BoundaryField& beta, const BoundaryField& phi,
                           double eps = 1e-3);

/// State derivative in direction h: A udot = -M_d(h) u, A the (linearized) state operator.
ScalarField sensitivity(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                        const ScalarField& u, const BoundaryField& h);

/// Second directional derivative J''(beta)[h, h].
double second_derivative(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                         const BoundaryField& h);

}  // namespace robinopt
