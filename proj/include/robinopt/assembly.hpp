#pragma once

#include <Eigen/SparseCore>

#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"

namespace robinopt {

/// Compressed-row symmetric sparse matrix.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// K_ij = \int grad(phi_i) . grad(phi_j) over P1 hat functions.
SparseMatrix stiffness(const Mesh& mesh);

/// Consistent mass M_ij = \int phi_i phi_j (element matrix area/12 [[2,1,1],[1,2,1],[1,1,2]]).
SparseMatrix domain_mass(const Mesh& mesh);

/// Row sums of the consistent mass, i.e. vertex-quadrature weights (area/3 per incident triangle).
Vector lumped_mass(const Mesh& mesh);

/// M_d(c)_ij = \int_{boundary} c phi_i phi_j with c constant per edge (exact).
///
/// Values are not restricted to [0, 1]: the same routine assembles penalty terms.
SparseMatrix boundary_mass(const Mesh& mesh, const BoundaryField& coeff);

/// b_i = \int_{boundary} g phi_i for an edge-constant g (exact: g_e L_e / 2 per endpoint).
Vector boundary_load(const Mesh& mesh, const BoundaryField& g);

/// Edge trapezoid weights w_i = sum of half-lengths of boundary edges incident to vertex i.
Vector boundary_weights(const Mesh& mesh);

/// Edge trapezoid averages (g_a + g_b)/2 of a nodal field.
BoundaryField edge_average(const Mesh& mesh, const Vector& nodal);

/// Edge means (1/L_e) \int_e u v of the product of two P1 fields (exact).
BoundaryField edge_product_mean(const Mesh& mesh, const Vector& u, const Vector& v);

/// Boundary trapezoid rule \sum_e L_e (g_a + g_b)/2.
double boundary_trapezoid(const Mesh& mesh, const Vector& nodal);

/// \sum_e L_e g_e.
double boundary_integral(const Mesh& mesh, const BoundaryField& g);

struct LoadOptions {
  /// Reject sources violating f >= 0, f not identically zero.
  bool strict = false;
};

/// F = M f for a nodal source f.
Vector load_vector(const Mesh& mesh, const ScalarField& f, const LoadOptions& opts = {});

/// Checks f >= 0 and f != 0; throws HypothesisError when `strict`, otherwise warns once on stderr.
void check_source(const ScalarField& f, bool strict);

struct SolveOptions {
  double tol = 1e-10;          ///< relative residual ||Ax - b|| <= tol ||b||, in (0, 1e-6]
  int max_iter = 0;            ///< 0 selects 10 * dimension
  bool dense_fallback = true;  ///< dense Cholesky when CG stalls and dimension <= 2000
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool used_dense = false;
};

/// Jacobi-preconditioned conjugate gradient for symmetric positive-definite systems.
///
/// Throws NumericalError on negative curvature (indefinite A) or when neither
/// CG nor the dense fallback reaches the tolerance.
Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolveOptions& opts = {}, SolveStats* stats = nullptr);

/// Relative symmetry defect max|A - A^T| / max|A|.
double symmetry_defect(const SparseMatrix& A);

/// Submatrix A(rows, cols), in the given order.
SparseMatrix restrict_matrix(const SparseMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols);

}  // namespace robinopt
