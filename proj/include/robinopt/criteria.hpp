#pragma once

#include <optional>
#include <string>
#include <utility>

#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"
#include "robinopt/state.hpp"

namespace robinopt {

/// Cost integrand j with its first two derivatives.
class CriterionJ {
 public:
  enum class Kind { identity, power, concave_quadratic };

  static CriterionJ identity() { return CriterionJ(Kind::identity, 0.0); }
  /// j(u) = u^gamma, gamma > 0 and gamma != 1.
  static CriterionJ power(double gamma);
  /// j(u) = -u^2/2 + (a/2) u; increasing only while u < a/2.
  static CriterionJ concave_quadratic(double a);

  [[nodiscard]] double j(double u) const;
  [[nodiscard]] double dj(double u) const;
  [[nodiscard]] double d2j(double u) const;

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double param() const { return param_; }
  [[nodiscard]] std::string name() const;

  /// Throws HypothesisError when j' <= 0 somewhere on [0, u_max] (concave quadratic only).
  void check_window(double u_max) const;

  /// Off by default only for the relaxation certificate, which deliberately leaves the window.
  bool enforce_window = true;

 private:
  CriterionJ(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

enum class Flavor { boundary, distributed, compliance };
enum class Sense { maximize, minimize };

std::string to_string(Flavor f);
std::string to_string(Sense s);
Flavor parse_flavor(const std::string& s);
Sense parse_sense(const std::string& s);

struct ProblemSpec {
  Flavor flavor = Flavor::compliance;
  Sense sense = Sense::minimize;
  CriterionJ j = CriterionJ::identity();
  ScalarField f;
  double V0 = 1.0;
  /// When set, the state is the logistic steady state y_beta instead of the linear Robin solution.
  std::optional<LogisticData> logistic;
  StateOptions state;
};

/// Checks the flavor/state combination and field sizes against the mesh.
void validate(const ProblemSpec& spec, const Mesh& mesh);

/// State u_beta (or y_beta) for the given problem.
ScalarField solve_state(const ProblemSpec& spec, const Mesh& mesh, const BoundaryField& beta);

/// Boundary: sum_e L_e (j(u_a) + j(u_b))/2; distributed: 1^T M j(u); compliance: f^T M u.
double eval_criterion(const ProblemSpec& spec, const Mesh& mesh, const ScalarField& u);

/// (f^T M u, -2 E(u)) with E(u) = u^T K u / 2 + u^T M_d(beta) u / 2 - f^T M u.
std::pair<double, double> compliance_energy_identity(const Mesh& mesh, const BoundaryField& beta,
                                                     const ScalarField& f, const StateOptions& opts = {});

}  // namespace robinopt
