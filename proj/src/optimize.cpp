#include "robinopt/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "robinopt/adjoint.hpp"
#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"
#include "robinopt/rng.hpp"
#include "robinopt/state.hpp"
#include "robinopt/steklov.hpp"

namespace robinopt {

std::string to_string(OptStatus s) {
  switch (s) {
    case OptStatus::converged: return "converged";
    case OptStatus::max_iter: return "max_iter";
    case OptStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

OptResult projected_gradient(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta0,
                             const OptOptions& opts) {
  validate(spec, mesh);
  if (beta0.size() != mesh.num_boundary_edges()) throw InputError("projected_gradient: beta0 has wrong size");
  if (!(opts.step0 > 0.0) || !(opts.backtrack > 0.0 && opts.backtrack < 1.0) || opts.max_iter < 0) {
    throw InputError("projected_gradient: invalid options");
  }
  const AdmissibleSpec adm = AdmissibleSpec::for_mesh(mesh, spec.V0);
  const Vector& L = adm.weights;
  const double sign = spec.sense == Sense::minimize ? 1.0 : -1.0;

  OptResult res;
  BoundaryField beta = project(beta0, adm).beta;
  GradientReport rep = gradient(spec, mesh, beta);
  Vector G = sign * -rep.phi.values;
  Vector prev_beta, prev_G;

  for (int k = 0;; ++k) {
    const BoundaryField unit = project(BoundaryField(beta.values - G), adm).beta;
    const double pg_norm = std::sqrt(L.dot((beta.values - unit.values).cwiseAbs2()));
    if (pg_norm <= opts.tol) {
      res.status = OptStatus::converged;
      res.history.push_back({k, rep.value, pg_norm, 0.0});
      break;
    }
    if (k >= opts.max_iter) {
      res.status = OptStatus::max_iter;
      res.history.push_back({k, rep.value, pg_norm, 0.0});
      break;
    }

    double t = opts.step0;
    if (opts.bb_steps && k > 0) {
      const Vector s = beta.values - prev_beta;
      const Vector y = G - prev_G;
      const double sy = L.dot(s.cwiseProduct(y));
      const double ss = L.dot(s.cwiseAbs2());
      if (sy > 0.0 && ss > 0.0) t = std::clamp(ss / sy, 1e-10, 1e10);
    }

    const double f0 = sign * rep.value;
    BoundaryField trial;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      trial = project(BoundaryField(beta.values - t * G), adm).beta;
      const double decrease = L.dot(G.cwiseProduct(trial.values - beta.values));
      const double f1 = sign * eval_criterion(spec, mesh, solve_state(spec, mesh, trial));
      if (f1 <= f0 + opts.armijo_c * decrease + 1e-14 * std::abs(f0)) {
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted) {
      res.status = OptStatus::line_search_failed;
      res.history.push_back({k, rep.value, pg_norm, 0.0});
      break;
    }
    res.history.push_back({k, rep.value, pg_norm, t});
    prev_beta = beta.values;
    prev_G = G;
    beta = std::move(trial);
    rep = gradient(spec, mesh, beta);
    G = sign * -rep.phi.values;
  }
  res.beta_star = std::move(beta);
  res.value = rep.value;
  res.lambda = rep.lambda;
  return res;
}

MultistartResult multistart(const ProblemSpec& spec, const Mesh& mesh, const OptOptions& opts, int starts,
                            std::uint64_t seed, int jobs) {
  if (starts < 1) throw InputError("multistart: need at least one start");
  const AdmissibleSpec adm = AdmissibleSpec::for_mesh(mesh, spec.V0);
  MultistartResult out;
  out.runs.resize(static_cast<std::size_t>(starts));
  for (int i = 0; i < starts; ++i) out.seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(i)));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (int i = next++; i < starts; i = next++) {
      try {
        Rng rng(out.seeds[static_cast<std::size_t>(i)]);
        const BoundaryField beta0 = random_feasible(adm, rng);
        out.runs[static_cast<std::size_t>(i)] = projected_gradient(spec, mesh, beta0, opts);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, starts);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const double sign = spec.sense == Sense::minimize ? 1.0 : -1.0;
  for (std::size_t i = 1; i < out.runs.size(); ++i) {
    if (sign * out.runs[i].value < sign * out.runs[out.best].value) out.best = i;
  }
  return out;
}

StructureReport kkt_residual(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta, double eps) {
  validate(spec, mesh);
  const GradientReport rep = gradient(spec, mesh, beta);
  StructureReport out;
  out.phi = rep.phi;
  out.lambda = multiplier_estimate(mesh, beta, rep.phi, eps);
  out.intermediate_length = intermediate_measure(mesh, beta, eps);
  const double at_bounds = mesh.perimeter() - out.intermediate_length;
  out.bangbang_fraction = at_bounds / mesh.perimeter();
  // Minimization: phi <= lambda where beta = 0, phi >= lambda where beta = 1; reversed for maximization.
  const double s = spec.sense == Sense::minimize ? 1.0 : -1.0;
  double r = 0.0;
  for (std::size_t e = 0; e < beta.size(); ++e) {
    const double d = rep.phi[e] - out.lambda;
    if (beta[e] <= eps) r = std::max(r, s * d);
    else if (beta[e] >= 1.0 - eps) r = std::max(r, -s * d);
    else r = std::max(r, std::abs(d));
  }
  out.residual = r;
  return out;
}

BangBangCertificate bangbang_certificate(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                                         int K, std::uint64_t seed, double eps) {
  validate(spec, mesh);
  const std::vector<int> support = intermediate_edges(beta, eps);
  if (static_cast<int>(support.size()) < K + 2) {
    throw HypothesisError("bangbang_certificate: intermediate set has " + std::to_string(support.size()) +
                          " edges, K = " + std::to_string(K) + " needs at least " + std::to_string(K + 2));
  }
  const ScalarField u = solve_state(spec, mesh, beta);
  const EigPairs eigs = steklov_eigs(mesh, beta, K + 1);
  BangBangCertificate out;
  out.K = K;
  out.support_size = support.size();
  out.sigma_K = eigs.sigmas[static_cast<std::size_t>(K)];
  out.h = build_highfreq(mesh, support, K, eigs, u, seed);
  out.ddotJ = second_derivative(spec, mesh, beta, out.h);
  return out;
}

RelaxationCertificate relaxation_certificate(const Mesh& mesh, const BoundaryField& beta, const ScalarField& f,
                                             double U0, double c_factor, const StateOptions& state) {
  RelaxationCertificate out;
  const ScalarField u = solve_robin(mesh, beta, f, state);
  const ScalarField z = solve_robin_boundary_source(mesh, beta, BoundaryField::constant(mesh, 1.0), state);
  out.Kconst = z.values.maxCoeff() / u.values.minCoeff();
  out.Lambda2 = steklov_eigs(mesh, BoundaryField::constant(mesh, 1.0), 3).sigmas[2];
  out.C = c_factor * out.Lambda2 * out.Kconst;
  out.U0 = U0;
  out.a = U0 + 1.0 / out.C;

  ProblemSpec spec;
  spec.flavor = Flavor::boundary;
  spec.sense = Sense::minimize;
  spec.j = CriterionJ::concave_quadratic(out.a);
  spec.j.enforce_window = false;
  spec.f = f;
  spec.V0 = boundary_integral(mesh, beta);
  spec.state = state;

  const EigPairs eigs = steklov_eigs(mesh, beta, 3);
  out.h = build_lowmode(mesh, u, eigs);
  out.ddotJ = second_derivative(spec, mesh, beta, out.h);
  return out;
}

double estimate_U0(const Mesh& mesh, const ScalarField& f, double V0, int samples, std::uint64_t seed,
                   const StateOptions& state) {
  const AdmissibleSpec adm = AdmissibleSpec::for_mesh(mesh, V0);
  double best = solve_robin(mesh, BoundaryField::constant(mesh, V0 / mesh.perimeter()), f, state).values.maxCoeff();
  Rng rng(seed);
  const std::size_t n = mesh.num_boundary_edges();
  for (int s = 0; s < samples; ++s) {
    BoundaryField g = BoundaryField::constant(mesh, 0.0);
    if (s % 2 == 0) {
      g = random_feasible(adm, rng);
    } else {
      // Bang-bang arc: an indicator concentrated on one contiguous run of edges.
      const std::size_t start = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n;
      BoundaryField arc = BoundaryField::constant(mesh, 0.0);
      for (std::size_t k = 0; k < n; ++k) arc[(start + k) % n] = 2.0 - static_cast<double>(k) / static_cast<double>(n);
      g = project(arc, adm).beta;
    }
    best = std::max(best, solve_robin(mesh, g, f, state).values.maxCoeff());
  }
  return best;
}

}  // namespace robinopt
