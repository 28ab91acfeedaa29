#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robinopt/assembly.hpp"
#include "robinopt/error.hpp"
#include "robinopt/steklov.hpp"

using namespace robinopt;

TEST_CASE("disk spectrum for constant beta") {
  const Mesh m = generate_disk(128, 24);
  for (double b : {0.0, 0.5, 1.0}) {
    const EigPairs e = steklov_eigs(m, BoundaryField::constant(m, b), 7);
    const auto ref = oracle::disk_steklov(b, 7);
    CHECK(e.max_residual < 1e-10);
    for (int k = 0; k < 7; ++k) CHECK(std::abs(e.sigmas[k] - ref[k]) < 5e-3 * std::max(1.0, ref[k]));
    for (int k = 1; k < 7; ++k) CHECK(e.sigmas[k] >= e.sigmas[k - 1]);
  }
}

TEST_CASE("modes: orthonormal traces, harmonic extension, sign") {
  const Mesh m = generate_disk(48, 8);
  BoundaryField beta = BoundaryField::constant(m, 0.0);
  for (int e = 0; e < 20; ++e) beta[e] = 1.0;
  const EigPairs e = steklov_eigs(m, beta, 6);
  const SparseMatrix Mb = boundary_mass(m, BoundaryField::constant(m, 1.0));
  const SparseMatrix A = stiffness(m) + boundary_mass(m, beta);
  for (int i = 0; i < 6; ++i) {
    const Vector& pi = e.modes[static_cast<std::size_t>(i)].values;
    for (int j = 0; j < 6; ++j) {
      const double g = pi.dot(Mb * e.modes[static_cast<std::size_t>(j)].values);
      CHECK(g == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
    // A phi = sigma M_b phi row by row (interior rows vanish)
    const Vector r = A * pi - e.sigmas[static_cast<std::size_t>(i)] * (Mb * pi);
    CHECK(r.cwiseAbs().maxCoeff() < 1e-9);
    Eigen::Index imax = 0;
    e.boundary_modes.col(i).cwiseAbs().maxCoeff(&imax);
    CHECK(e.boundary_modes(imax, i) > 0.0);
  }
  CHECK(e.sigmas[0] > 0.0);
}

TEST_CASE("expansions and Parseval") {
  const Mesh m = generate_disk(32, 6);
  const EigPairs all = steklov_eigs(m, BoundaryField::constant(m, 0.3), 32);
  const Vector x = ScalarField::interpolate(m, [](const Point& p) { return std::exp(p.x()) + p.y(); }).values;
  const Expansion ex = expand_trace(m, all, x);
  CHECK(ex.residual < 1e-6);
  const SparseMatrix Mb = boundary_mass(m, BoundaryField::constant(m, 1.0));
  CHECK(ex.coeffs.squaredNorm() == doctest::Approx(x.dot(Mb * x)).epsilon(1e-10));

  BoundaryField g = BoundaryField::constant(m, 0.0);
  g[3] = 2.0;
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(m.num_vertices()));
  CHECK((expand_edge_field(m, all, g).coeffs - expand_product(m, all, g, ones).coeffs).norm() < 1e-12);

  const EigPairs few = steklov_eigs(m, BoundaryField::constant(m, 0.3), 3);
  const Expansion part = expand_trace(m, few, x);
  CHECK(part.coeffs.size() == 3);
  CHECK(part.residual > 1e-3);
  CHECK((part.coeffs - ex.coeffs.head(3)).norm() < 1e-10);
}

TEST_CASE("argument checks") {
  const Mesh m = generate_square(3);
  CHECK_THROWS_AS(steklov_eigs(m, BoundaryField::constant(m, 1.0), 0), InputError);
  CHECK_THROWS_AS(steklov_eigs(m, BoundaryField::constant(m, 1.0), 13), InputError);
  CHECK(steklov_eigs(m, BoundaryField::constant(m, 1.0), 12).count() == 12);
}
