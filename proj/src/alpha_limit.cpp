#include "robinopt/alpha_limit.hpp"

#include <cmath>

#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"

namespace robinopt {

AlphaSweep alpha_sweep(const Mesh& mesh, const std::vector<int>& gamma_edges, const ScalarField& f,
                       const std::vector<double>& alphas, const StateOptions& opts) {
  if (alphas.empty()) throw InputError("alpha_sweep: empty alpha list");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0) || (i > 0 && !(alphas[i] > alphas[i - 1]))) {
      throw InputError("alpha_sweep: alphas must be positive and strictly ascending");
    }
  }
  AlphaSweep out;
  out.limit = solve_mixed(mesh, gamma_edges, f, opts);

  BoundaryField indicator = BoundaryField::constant(mesh, 0.0);
  for (int e : gamma_edges) indicator[static_cast<std::size_t>(e)] = 1.0;
  const SparseMatrix K = stiffness(mesh);
  const SparseMatrix M = domain_mass(mesh);
  const SparseMatrix Mg = boundary_mass(mesh, indicator);
  const Vector F = load_vector(mesh, f, LoadOptions{opts.strict_source});
  const Vector& v = out.limit.values;
  out.limit_l2_norm = std::sqrt(v.dot(M * v));
  out.limit_energy = 0.5 * v.dot(K * v) - F.dot(v);

  for (double alpha : alphas) {
    const ScalarField u = solve_robin_coefficient(mesh, BoundaryField(alpha * indicator.values), f, opts);
    const Vector d = u.values - v;
    AlphaRow row;
    row.alpha = alpha;
    row.l2_error = std::sqrt(d.dot(M * d));
    row.h1_semi_error = std::sqrt(std::max(0.0, d.dot(K * d)));
    row.gamma_trace_sq = u.values.dot(Mg * u.values);
    row.energy = 0.5 * u.values.dot(K * u.values) + 0.5 * alpha * row.gamma_trace_sq - F.dot(u.values);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace robinopt
