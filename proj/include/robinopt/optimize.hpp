#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robinopt/admissible.hpp"
#include "robinopt/criteria.hpp"
#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"

namespace robinopt {

struct OptOptions {
  int max_iter = 500;
  double step0 = 1.0;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_halvings = 40;
  /// Stop when ||beta - P(beta - G)||_L <= tol (G the signed gradient).
  double tol = 1e-8;
  /// Barzilai-Borwein trial steps after the first iteration; step0 every iteration otherwise.
  bool bb_steps = true;
};

enum class OptStatus { converged, max_iter, line_search_failed };
std::string to_string(OptStatus s);

struct HistoryRow {
  int iter = 0;
  double value = 0.0;
  double pg_norm = 0.0;
  double step = 0.0;  ///< accepted step (0 on the final row)
};

struct OptResult {
  BoundaryField beta_star;
  std::vector<HistoryRow> history;
  OptStatus status = OptStatus::max_iter;
  double lambda = 0.0;
  double value = 0.0;
  [[nodiscard]] bool converged() const { return status == OptStatus::converged; }
};

/// Projected gradient with Armijo backtracking over the admissible class of `spec.V0`.
OptResult projected_gradient(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta0,
                             const OptOptions& opts = {});

struct MultistartResult {
  std::vector<OptResult> runs;
  std::vector<std::uint64_t> seeds;
  std::size_t best = 0;
};

/// `starts` runs from seeded random feasible points, up to `jobs` in parallel; best by sense.
MultistartResult multistart(const ProblemSpec& spec, const Mesh& mesh, const OptOptions& opts, int starts,
                            std::uint64_t seed, int jobs = 1);

struct StructureReport {
  double intermediate_length = 0.0;
  double bangbang_fraction = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  BoundaryField phi;
};

/// First-order level-set conditions at beta with multiplier lambda.
StructureReport kkt_residual(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                             double eps = 1e-3);

struct BangBangCertificate {
  double ddotJ = 0.0;
  BoundaryField h;
  double sigma_K = 0.0;  ///< first eigenvalue not removed by the moment conditions
  int K = 0;
  std::size_t support_size = 0;
};

/// Second derivative along a high-frequency h supported on the intermediate set of beta.
BangBangCertificate bangbang_certificate(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta,
                                         int K, std::uint64_t seed, double eps = 1e-3);

struct RelaxationCertificate {
  double ddotJ = 0.0;
  double Kconst = 0.0;   ///< max z_beta / min u_beta
  double Lambda2 = 0.0;  ///< sigma_2 for beta = 1
  double C = 0.0;
  double a = 0.0;        ///< parameter of the concave quadratic
  double U0 = 0.0;
  BoundaryField h;
};

/// Second derivative of the boundary criterion with j(u) = -u^2/2 + (a/2) u, a = U0 + 1/C and
/// C = c_factor * Lambda2 * K, along the low-mode perturbation at beta.
RelaxationCertificate relaxation_certificate(const Mesh& mesh, const BoundaryField& beta, const ScalarField& f,
                                             double U0, double c_factor = 2.0, const StateOptions& state = {});

/// max over sampled admissible beta (plus the constant one) of max_x u_beta(x).
double estimate_U0(const Mesh& mesh, const ScalarField& f, double V0, int samples, std::uint64_t seed,
                    const StateOptions& state = {});

}  // namespace robinopt
