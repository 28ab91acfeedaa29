#pragma once

#include <vector>

#include "robinopt/fields.hpp"
#include "robinopt/mesh.hpp"
#include "robinopt/state.hpp"

namespace robinopt {

struct AlphaRow {
  double alpha = 0.0;
  double l2_error = 0.0;        ///< ||u_alpha - v||_M
  double h1_semi_error = 0.0;   ///< sqrt((u_alpha - v)^T K (u_alpha - v))
  double energy = 0.0;          ///< u^T K u / 2 + (alpha/2) \int_Gamma u^2 - f^T M u
  double gamma_trace_sq = 0.0;  ///< \int_Gamma u_alpha^2
};

struct AlphaSweep {
  std::vector<AlphaRow> rows;
  double limit_l2_norm = 0.0;  ///< ||v||_M
  double limit_energy = 0.0;   ///< energy of v with alpha = 0
  ScalarField limit;           ///< v, the mixed solution
};

/// Robin solves with coefficient alpha on the edges of Gamma (0 elsewhere), compared with the mixed solution.
AlphaSweep alpha_sweep(const Mesh& mesh, const std::vector<int>& gamma_edges, const ScalarField& f,
                       const std::vector<double>& alphas, const StateOptions& opts = {});

}  // namespace robinopt
