#pragma once

#include <cstdint>
#include <vector>

#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"
#include "robinopt/rng.hpp"

namespace robinopt {

struct EigPairs;

/// Discrete admissible class {0 <= beta_e <= 1, sum_e L_e beta_e = V0}.
struct AdmissibleSpec {
  double V0 = 0.0;
  Vector weights;  ///< L_e

  static AdmissibleSpec for_mesh(const Mesh& mesh, double V0);
  [[nodiscard]] double total() const { return weights.sum(); }
};

/// Weighted mass sum_e w_e beta_e.
double mass(const AdmissibleSpec& spec, const BoundaryField& beta);

/// sqrt(sum_e w_e g_e^2).
double weighted_norm(const AdmissibleSpec& spec, const BoundaryField& g);

struct Projection {
  BoundaryField beta;
  double tau = 0.0;
};

/// Weighted Euclidean projection beta_e = clamp(g_e - tau, 0, 1); tau is the largest root of the mass equation.
Projection project(const BoundaryField& g, const AdmissibleSpec& spec);

/// Feasible beta from uniform random data, projected.
BoundaryField random_feasible(const AdmissibleSpec& spec, Rng& rng);

/// Feasible beta strictly inside the box: V0/P plus a mass-neutral random bump of relative size `spread` < 1.
BoundaryField random_interior(const AdmissibleSpec& spec, Rng& rng, double spread = 0.8);

/// Random mass-neutral direction with unit weighted norm.
BoundaryField random_direction(const AdmissibleSpec& spec, Rng& rng);

/// sum of L_e over edges with eps < beta_e < 1 - eps.
double intermediate_measure(const Mesh& mesh, const BoundaryField& beta, double eps = 1e-3);

/// sum of L_e over edges with beta_e <= thr.
double zero_set_measure(const Mesh& mesh, const BoundaryField& beta, double thr = 1e-3);

/// Indices of the eps-interior edges.
std::vector<int> intermediate_edges(const BoundaryField& beta, double eps = 1e-3);

/// Mass-neutral h on `support` with unit weighted norm and sum_e L_e h_e (u phi_k)_e = 0 for k < K.
///
/// (u phi_k)_e is the exact edge mean of the product of the two P1 traces.
BoundaryField build_highfreq(const Mesh& mesh, const std::vector<int>& support, int K, const EigPairs& eigs,
                             const ScalarField& u, std::uint64_t seed);

/// h = edge average of (a1 phi_1 + a2 phi_2)/u with a1 = sum L (phi_2/u)_e, a2 = -sum L (phi_1/u)_e.
BoundaryField build_lowmode(const Mesh& mesh, const ScalarField& u, const EigPairs& eigs);

}  // namespace robinopt
