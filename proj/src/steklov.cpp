#include "robinopt/steklov.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"

namespace robinopt {

EigPairs steklov_eigs(const Mesh& mesh, const BoundaryField& beta, int count) {
  const std::vector<int>& bnd = mesh.boundary_vertices();
  const auto nb = static_cast<Eigen::Index>(bnd.size());
  if (count < 1 || count > nb) {
    throw InputError("steklov_eigs: requested " + std::to_string(count) + " pairs, the mesh has " +
                     std::to_string(nb) + " boundary vertices");
  }
  std::vector<int> interior;
  for (int v = 0; v < static_cast<int>(mesh.num_vertices()); ++v) {
    if (!mesh.is_boundary_vertex(v)) interior.push_back(v);
  }

  const SparseMatrix A = stiffness(mesh) + boundary_mass(mesh, beta);
  const Eigen::MatrixXd Abb(restrict_matrix(A, bnd, bnd));
  const Eigen::MatrixXd Mbb(restrict_matrix(boundary_mass(mesh, BoundaryField::constant(mesh, 1.0)), bnd, bnd));

  Eigen::MatrixXd S = Abb;
  Eigen::MatrixXd ext;  // A_ii^{-1} A_ib
  if (!interior.empty()) {
    using ColMajor = Eigen::SparseMatrix<double>;
    const ColMajor Aii(restrict_matrix(A, interior, interior));
    const ColMajor Aib(restrict_matrix(A, interior, bnd));
    Eigen::SimplicialLLT<ColMajor> llt(Aii);
    if (llt.info() != Eigen::Success) throw NumericalError("steklov_eigs: internal error, interior block is singular");
    ext = llt.solve(Eigen::MatrixXd(Aib));
    S -= Eigen::MatrixXd(Aib).transpose() * ext;
  }
  S = 0.5 * (S + S.transpose()).eval();

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(S, Mbb);
  if (solver.info() != Eigen::Success) throw NumericalError("steklov_eigs: dense eigensolver failed");

  EigPairs out;
  out.boundary_vertices = bnd;
  out.boundary_modes.resize(nb, count);
  for (int k = 0; k < count; ++k) {
    Vector x = solver.eigenvectors().col(k);
    Eigen::Index imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    if (x[imax] < 0.0) x = -x;
    const double sigma = solver.eigenvalues()[k];
    out.sigmas.push_back(sigma);
    out.boundary_modes.col(k) = x;
    out.max_residual = std::max(out.max_residual, (S * x - sigma * (Mbb * x)).norm());

    Vector full = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (Eigen::Index i = 0; i < nb; ++i) full[bnd[static_cast<std::size_t>(i)]] = x[i];
    if (!interior.empty()) {
      const Vector xi = -ext * x;
      for (std::size_t i = 0; i < interior.size(); ++i) full[interior[i]] = xi[static_cast<Eigen::Index>(i)];
    }
    out.modes.emplace_back(std::move(full));
  }
  return out;
}

namespace {

Expansion finish(Vector coeffs, double norm_sq) {
  Expansion e;
  e.residual = std::sqrt(std::max(0.0, norm_sq - coeffs.squaredNorm()));
  e.coeffs = std::move(coeffs);
  return e;
}

}  // namespace

Expansion expand_trace(const Mesh& mesh, const EigPairs& eigs, const Vector& nodal) {
  const SparseMatrix Mb = boundary_mass(mesh, BoundaryField::constant(mesh, 1.0));
  const Vector Mg = Mb * nodal;
  Vector c(eigs.count());
  for (int k = 0; k < eigs.count(); ++k) c[k] = eigs.modes[static_cast<std::size_t>(k)].values.dot(Mg);
  return finish(std::move(c), nodal.dot(Mg));
}

Expansion expand_edge_field(const Mesh& mesh, const EigPairs& eigs, const BoundaryField& g) {
  const Vector b = boundary_load(mesh, g);
  Vector c(eigs.count());
  for (int k = 0; k < eigs.count(); ++k) c[k] = eigs.modes[static_cast<std::size_t>(k)].values.dot(b);
  double norm_sq = 0.0;
  for (std::size_t e = 0; e < g.size(); ++e) norm_sq += mesh.boundary_edges()[e].length * g[e] * g[e];
  return finish(std::move(c), norm_sq);
}

Expansion expand_product(const Mesh& mesh, const EigPairs& eigs, const BoundaryField& g, const Vector& nodal) {
  const SparseMatrix Mg = boundary_mass(mesh, g);
  const Vector b = Mg * nodal;
  Vector c(eigs.count());
  for (int k = 0; k < eigs.count(); ++k) c[k] = eigs.modes[static_cast<std::size_t>(k)].values.dot(b);
  const BoundaryField g2(g.values.cwiseAbs2());
  return finish(std::move(c), nodal.dot(boundary_mass(mesh, g2) * nodal));
}

}  // namespace robinopt
