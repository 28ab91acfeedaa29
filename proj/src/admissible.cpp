#include "robinopt/admissible.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"
#include "robinopt/steklov.hpp"

namespace robinopt {

AdmissibleSpec AdmissibleSpec::for_mesh(const Mesh& mesh, double V0) {
  AdmissibleSpec spec;
  spec.V0 = V0;
  spec.weights.resize(static_cast<Eigen::Index>(mesh.num_boundary_edges()));
  for (std::size_t e = 0; e < mesh.num_boundary_edges(); ++e) {
    spec.weights[static_cast<Eigen::Index>(e)] = mesh.boundary_edges()[e].length;
  }
  return spec;
}

double mass(const AdmissibleSpec& spec, const BoundaryField& beta) { return spec.weights.dot(beta.values); }

double weighted_norm(const AdmissibleSpec& spec, const BoundaryField& g) {
  return std::sqrt(spec.weights.dot(g.values.cwiseAbs2()));
}

Projection project(const BoundaryField& g, const AdmissibleSpec& spec) {
  const Vector& w = spec.weights;
  if (g.values.size() != w.size()) throw InputError("project: field size does not match the weights");
  if (w.size() == 0 || (w.array() <= 0.0).any()) throw InputError("project: weights must be positive");
  const double total = w.sum();
  if (!(spec.V0 > 0.0) || !(spec.V0 <= total)) {
    std::ostringstream os;
    os << "project: infeasible V0 = " << spec.V0 << ", must lie in (0, " << total << "]";
    throw HypothesisError(os.str());
  }
  const auto mass_at = [&](double tau) {
    return w.dot((g.values.array() - tau).max(0.0).min(1.0).matrix());
  };
  // mass_at is nonincreasing: total at lo, 0 at hi.
  double lo = g.values.minCoeff() - 1.0;
  double hi = g.values.maxCoeff();
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mass_at(mid) >= spec.V0) lo = mid;
    else hi = mid;
  }
  Projection out;
  out.tau = lo;
  out.beta = BoundaryField(((g.values.array() - lo).max(0.0).min(1.0)).matrix());
  return out;
}

BoundaryField random_feasible(const AdmissibleSpec& spec, Rng& rng) {
  Vector g(spec.weights.size());
  for (Eigen::Index e = 0; e < g.size(); ++e) g[e] = rng.uniform();
  return project(BoundaryField(std::move(g)), spec).beta;
}

BoundaryField random_interior(const AdmissibleSpec& spec, Rng& rng, double spread) {
  const double c = spec.V0 / spec.total();
  if (!(c > 0.0 && c < 1.0) || !(spread > 0.0 && spread < 1.0)) {
    throw HypothesisError("random_interior: needs 0 < V0 < perimeter and spread in (0, 1)");
  }
  Vector r(spec.weights.size());
  for (Eigen::Index e = 0; e < r.size(); ++e) r[e] = rng.uniform(-1.0, 1.0);
  r.array() -= spec.weights.dot(r) / spec.total();
  const double peak = r.cwiseAbs().maxCoeff();
  if (peak > 0.0) r *= spread * std::min(c, 1.0 - c) / peak;
  return BoundaryField((r.array() + c).matrix());
}

BoundaryField random_direction(const AdmissibleSpec& spec, Rng& rng) {
  Vector h(spec.weights.size());
  for (Eigen::Index e = 0; e < h.size(); ++e) h[e] = rng.normal();
  h.array() -= spec.weights.dot(h) / spec.weights.sum();
  h /= std::sqrt(spec.weights.dot(h.cwiseAbs2()));
  return BoundaryField(std::move(h));
}

double intermediate_measure(const Mesh& mesh, const BoundaryField& beta, double eps) {
  double s = 0.0;
  for (int e : intermediate_edges(beta, eps)) s += mesh.boundary_edges()[static_cast<std::size_t>(e)].length;
  return s;
}

double zero_set_measure(const Mesh& mesh, const BoundaryField& beta, double thr) {
  double s = 0.0;
  for (std::size_t e = 0; e < beta.size(); ++e) {
    if (beta[e] <= thr) s += mesh.boundary_edges()[e].length;
  }
  return s;
}

std::vector<int> intermediate_edges(const BoundaryField& beta, double eps) {
  std::vector<int> out;
  for (std::size_t e = 0; e < beta.size(); ++e) {
    if (beta[e] > eps && beta[e] < 1.0 - eps) out.push_back(static_cast<int>(e));
  }
  return out;
}

BoundaryField build_highfreq(const Mesh& mesh, const std::vector<int>& support, int K, const EigPairs& eigs,
                             const ScalarField& u, std::uint64_t seed) {
  if (K < 0) throw InputError("build_highfreq: K must be >= 0");
  if (eigs.count() < K) {
    throw InputError("build_highfreq: " + std::to_string(K) + " modes requested, only " +
                     std::to_string(eigs.count()) + " computed");
  }
  if (u.size() != mesh.num_vertices() || (K > 0 && eigs.modes[0].size() != mesh.num_vertices())) {
    throw InputError("build_highfreq: state or modes do not match the mesh");
  }
  const auto n = static_cast<Eigen::Index>(support.size());
  if (n < K + 2) {
    throw HypothesisError("build_highfreq: support has " + std::to_string(n) + " edges, at least " +
                          std::to_string(K + 2) + " are required for K = " + std::to_string(K));
  }
  Vector L(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int e = support[static_cast<std::size_t>(i)];
    if (e < 0 || static_cast<std::size_t>(e) >= mesh.num_boundary_edges()) {
      throw InputError("build_highfreq: support edge " + std::to_string(e) + " out of range");
    }
    L[i] = mesh.boundary_edges()[static_cast<std::size_t>(e)].length;
  }
  const auto dot = [&](const Vector& a, const Vector& b) { return L.dot(a.cwiseProduct(b)); };

  std::vector<Vector> constraints;
  constraints.emplace_back(Vector::Ones(n));
  for (int k = 0; k < K; ++k) {
    const BoundaryField m = edge_product_mean(mesh, u.values, eigs.modes[static_cast<std::size_t>(k)].values);
    Vector c(n);
    for (Eigen::Index i = 0; i < n; ++i) c[i] = m[static_cast<std::size_t>(support[static_cast<std::size_t>(i)])];
    constraints.push_back(std::move(c));
  }
  // Weighted modified Gram-Schmidt, two passes; dependent constraints are dropped.
  std::vector<Vector> basis;
  for (Vector c : constraints) {
    const double scale = std::sqrt(dot(c, c));
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) c -= dot(q, c) * q;
    }
    const double nrm = std::sqrt(dot(c, c));
    if (nrm > 1e-12 * scale && nrm > 0.0) basis.push_back(c / nrm);
  }

  Rng rng(seed);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vector h(n);
    for (Eigen::Index i = 0; i < n; ++i) h[i] = rng.normal();
    const double scale = std::sqrt(dot(h, h));
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) h -= dot(q, h) * q;
    }
    const double nrm = std::sqrt(dot(h, h));
    if (!(nrm > 1e-10 * scale)) continue;
    h /= nrm;
    BoundaryField out = BoundaryField::constant(mesh, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(support[static_cast<std::size_t>(i)])] = h[i];
    return out;
  }
  throw HypothesisError("build_highfreq: constraint kernel is trivial on the given support");
}

BoundaryField build_lowmode(const Mesh& mesh, const ScalarField& u, const EigPairs& eigs) {
  if (eigs.count() < 3) throw InputError("build_lowmode: needs the modes phi_0, phi_1, phi_2");
  if (u.size() != mesh.num_vertices() || eigs.modes[1].size() != mesh.num_vertices()) {
    throw InputError("build_lowmode: state or modes do not match the mesh");
  }
  const Vector q1 = eigs.modes[1].values.cwiseQuotient(u.values);
  const Vector q2 = eigs.modes[2].values.cwiseQuotient(u.values);
  const BoundaryField e1 = edge_average(mesh, q1);
  const BoundaryField e2 = edge_average(mesh, q2);
  const double a1 = boundary_integral(mesh, e2);
  const double a2 = -boundary_integral(mesh, e1);
  double scale = 0.0;
  for (std::size_t e = 0; e < e1.size(); ++e) {
    scale += mesh.boundary_edges()[e].length * (std::abs(e1[e]) + std::abs(e2[e]));
  }
  if (!(std::hypot(a1, a2) > 1e-10 * scale)) {
    std::ostringstream os;
    os << "build_lowmode: degenerate coefficients alpha1 = " << a1 << ", alpha2 = " << a2
       << " (phi_1/u and phi_2/u both have zero mean)";
    throw HypothesisError(os.str());
  }
  return BoundaryField(a1 * e1.values + a2 * e2.values);
}

}  // namespace robinopt
