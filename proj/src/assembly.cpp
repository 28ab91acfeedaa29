#include "robinopt/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "robinopt/error.hpp"

namespace robinopt {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(std::size_t n, const std::vector<Triplet>& triplets) {
  SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

}  // namespace

SparseMatrix stiffness(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.num_triangles() * 9);
  const auto& xy = mesh.vertices();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = mesh.triangle_area(t);
    // grad(phi_k) = rot90(opposite edge) / (2 area)
    Eigen::Matrix<double, 2, 3> grad;
    for (int k = 0; k < 3; ++k) {
      const Point& a = xy[tri[(k + 1) % 3]];
      const Point& b = xy[tri[(k + 2) % 3]];
      grad.col(k) = Point(a.y() - b.y(), b.x() - a.x()) / (2.0 * area);
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) triplets.emplace_back(tri[a], tri[b], area * grad.col(a).dot(grad.col(b)));
    }
  }
  return from_triplets(mesh.num_vertices(), triplets);
}

SparseMatrix domain_mass(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.num_triangles() * 9);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = mesh.triangle_area(t);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) triplets.emplace_back(tri[a], tri[b], area / 12.0 * (a == b ? 2.0 : 1.0));
    }
  }
  return from_triplets(mesh.num_vertices(), triplets);
}

Vector lumped_mass(const Mesh& mesh) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double third = mesh.triangle_area(t) / 3.0;
    for (int v : mesh.triangles()[t]) w[v] += third;
  }
  return w;
}

SparseMatrix boundary_mass(const Mesh& mesh, const BoundaryField& coeff) {
  if (coeff.size() != mesh.num_boundary_edges()) {
    throw InputError("boundary_mass: field has " + std::to_string(coeff.size()) + " values for " +
                     std::to_string(mesh.num_boundary_edges()) + " boundary edges");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.num_boundary_edges() * 4);
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double c = coeff[e] * edges[e].length;
    if (c == 0.0) continue;
    const int a = edges[e].v[0], b = edges[e].v[1];
    triplets.emplace_back(a, a, c / 3.0);
    triplets.emplace_back(b, b, c / 3.0);
    triplets.emplace_back(a, b, c / 6.0);
    triplets.emplace_back(b, a, c / 6.0);
  }
  return from_triplets(mesh.num_vertices(), triplets);
}

Vector boundary_load(const Mesh& mesh, const BoundaryField& g) {
  if (g.size() != mesh.num_boundary_edges()) throw InputError("boundary_load: size mismatch");
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double half = 0.5 * g[e] * edges[e].length;
    b[edges[e].v[0]] += half;
    b[edges[e].v[1]] += half;
  }
  return b;
}

Vector boundary_weights(const Mesh& mesh) { return boundary_load(mesh, BoundaryField::constant(mesh, 1.0)); }

BoundaryField edge_average(const Mesh& mesh, const Vector& nodal) {
  BoundaryField out = BoundaryField::constant(mesh, 0.0);
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) out[e] = 0.5 * (nodal[edges[e].v[0]] + nodal[edges[e].v[1]]);
  return out;
}

BoundaryField edge_product_mean(const Mesh& mesh, const Vector& u, const Vector& v) {
  BoundaryField out = BoundaryField::constant(mesh, 0.0);
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int a = edges[e].v[0], b = edges[e].v[1];
    out[e] = (2.0 * u[a] * v[a] + u[a] * v[b] + u[b] * v[a] + 2.0 * u[b] * v[b]) / 6.0;
  }
  return out;
}

double boundary_trapezoid(const Mesh& mesh, const Vector& nodal) {
  double s = 0.0;
  for (const auto& e : mesh.boundary_edges()) s += 0.5 * e.length * (nodal[e.v[0]] + nodal[e.v[1]]);
  return s;
}

double boundary_integral(const Mesh& mesh, const BoundaryField& g) {
  double s = 0.0;
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) s += edges[e].length * g[e];
  return s;
}

void check_source(const ScalarField& f, bool strict) {
  const bool negative = f.values.size() > 0 && f.values.minCoeff() < 0.0;
  const bool vanishing = f.values.size() == 0 || f.values.cwiseAbs().maxCoeff() == 0.0;
  if (!negative && !vanishing) return;
  const std::string msg = negative ? "source f takes negative values" : "source f vanishes identically";
  if (strict) throw HypothesisError(msg + " (requires f >= 0, f != 0)");
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) std::clog << "robinopt: warning: " << msg << '\n';
}

Vector load_vector(const Mesh& mesh, const ScalarField& f, const LoadOptions& opts) {
  if (f.size() != mesh.num_vertices()) throw InputError("load_vector: source has wrong size");
  check_source(f, opts.strict);
  return domain_mass(mesh) * f.values;
}

Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolveOptions& opts, SolveStats* stats) {
  if (!(opts.tol > 0.0) || opts.tol > 1e-6) {
    throw InputError("solve_spd: tolerance must lie in (0, 1e-6], got " + std::to_string(opts.tol));
  }
  const Eigen::Index n = A.rows();
  if (A.cols() != n || b.size() != n) throw InputError("solve_spd: dimension mismatch");
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};

  const double bnorm = b.norm();
  if (bnorm == 0.0) return Vector::Zero(n);

  const Vector diag = A.diagonal();
  if ((diag.array() <= 0.0).any()) throw NumericalError("solve_spd: non-positive diagonal entry, matrix is not SPD");
  const Vector inv_diag = diag.cwiseInverse();

  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * n);
  Vector x = b.cwiseProduct(inv_diag);
  Vector r = b - A * x;
  Vector z = r.cwiseProduct(inv_diag);
  Vector p = z;
  double rz = r.dot(z);
  Vector Ap(n);
  int it = 0;
  for (; it < max_iter && r.norm() > opts.tol * bnorm; ++it) {
    Ap.noalias() = A * p;
    const double curvature = p.dot(Ap);
    if (!(curvature > 0.0)) {
      throw NumericalError("solve_spd: negative curvature p^T A p = " + std::to_string(curvature) +
                           " at iteration " + std::to_string(it) + ", matrix is indefinite");
    }
    const double alpha = rz / curvature;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    // Refresh the recursive residual now and then to limit drift.
    if ((it + 1) % 200 == 0) r = b - A * x;
    z = r.cwiseProduct(inv_diag);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  st.iterations = it;
  st.relative_residual = (b - A * x).norm() / bnorm;
  if (st.relative_residual <= opts.tol) return x;

  if (opts.dense_fallback && n <= 2000) {
    const Eigen::MatrixXd dense(A);
    Eigen::LLT<Eigen::MatrixXd> llt(dense);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_spd: dense Cholesky failed, matrix is not SPD");
    x = llt.solve(b);
    st.used_dense = true;
    st.relative_residual = (b - A * x).norm() / bnorm;
    if (st.relative_residual <= opts.tol) return x;
  }
  std::ostringstream os;
  os << "solve_spd: no convergence after " << it << " iterations (n = " << n << "), relative residual "
     << std::scientific << st.relative_residual << " > " << opts.tol;
  throw NumericalError(os.str());
}

double symmetry_defect(const SparseMatrix& A) {
  double scale = 0.0;
  for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  if (scale == 0.0) return 0.0;
  double defect = 0.0;
  const SparseMatrix At = A.transpose();
  const SparseMatrix D = A - At;
  for (Eigen::Index k = 0; k < D.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(D, k); it; ++it) defect = std::max(defect, std::abs(it.value()));
  }
  return defect / scale;
}

SparseMatrix restrict_matrix(const SparseMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> col_map(static_cast<std::size_t>(A.cols()), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[static_cast<std::size_t>(cols[j])] = static_cast<int>(j);
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (SparseMatrix::InnerIterator it(A, rows[i]); it; ++it) {
      const int j = col_map[static_cast<std::size_t>(it.col())];
      if (j >= 0) triplets.emplace_back(static_cast<int>(i), j, it.value());
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

}  // namespace robinopt
