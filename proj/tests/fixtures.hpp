#pragma once

#include <string>
#include <vector>

#include "robinopt/criteria.hpp"
#include "robinopt/mesh.hpp"

namespace fixture {

using namespace robinopt;

struct Case {
  std::string name;
  ProblemSpec spec;
};

/// One problem per criterion flavor, f = 1 (m = 4 for the logistic state), V0 = 0.3 P.
inline std::vector<Case> flavors(const Mesh& mesh) {
  const double V0 = 0.3 * mesh.perimeter();
  const auto base = [&](Flavor fl, Sense s, CriterionJ j) {
    ProblemSpec p;
    p.flavor = fl;
    p.sense = s;
    p.j = j;
    p.f = ScalarField::constant(mesh, 1.0);
    p.V0 = V0;
    p.state.solve.tol = 1e-12;
    return p;
  };
  std::vector<Case> out;
  out.push_back({"boundary u^2", base(Flavor::boundary, Sense::maximize, CriterionJ::power(2.0))});
  out.push_back({"distributed u", base(Flavor::distributed, Sense::maximize, CriterionJ::identity())});
  out.push_back({"compliance", base(Flavor::compliance, Sense::minimize, CriterionJ::identity())});
  out.push_back({"boundary quadratic", base(Flavor::boundary, Sense::minimize, CriterionJ::concave_quadratic(40.0))});
  ProblemSpec logi = base(Flavor::distributed, Sense::maximize, CriterionJ::identity());
  LogisticData d;
  d.m = ScalarField::constant(mesh, 4.0);
  d.newton_tol = 1e-13;
  logi.logistic = d;
  out.push_back({"logistic", logi});
  return out;
}

}  // namespace fixture
