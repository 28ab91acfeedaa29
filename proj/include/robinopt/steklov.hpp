#pragma once

#include <vector>

#include <Eigen/Core>

#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"

namespace robinopt {

/// Robin-Steklov pairs: harmonic phi with d_nu phi + beta phi = sigma phi on the boundary.
struct EigPairs {
  std::vector<double> sigmas;          ///< ascending
  std::vector<ScalarField> modes;      ///< harmonic extensions, boundary-orthonormal
  std::vector<int> boundary_vertices;  ///< row order of `boundary_modes`
  Eigen::MatrixXd boundary_modes;      ///< one column per mode
  double max_residual = 0.0;           ///< max_k ||S x_k - sigma_k M_bb x_k||

  [[nodiscard]] int count() const { return static_cast<int>(sigmas.size()); }
};

/// The `count` smallest pairs, via Schur complement onto the boundary vertices and a dense pencil solve.
///
/// Orthonormality is w.r.t. the exact boundary mass with unit coefficient.
EigPairs steklov_eigs(const Mesh& mesh, const BoundaryField& beta, int count);

struct Expansion {
  Vector coeffs;
  /// sqrt(max(0, ||g||^2 - sum alpha_k^2)), the part of g outside the computed modes.
  double residual = 0.0;
};

/// alpha_k = \int_{boundary} g phi_k for a P1 trace g (nodal values on all vertices; only the trace is used).
Expansion expand_trace(const Mesh& mesh, const EigPairs& eigs, const Vector& nodal);

/// alpha_k = \int_{boundary} g phi_k for an edge-constant g.
Expansion expand_edge_field(const Mesh& mesh, const EigPairs& eigs, const BoundaryField& g);

/// alpha_k = \int_{boundary} g v phi_k for an edge-constant g times a P1 trace v (e.g. -h u).
Expansion expand_product(const Mesh& mesh, const EigPairs& eigs, const BoundaryField& g, const Vector& nodal);

}  // namespace robinopt
