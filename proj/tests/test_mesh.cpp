#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robinopt/error.hpp"
#include "robinopt/mesh.hpp"

using namespace robinopt;

namespace {

void check_invariants(const Mesh& m) {
  double area = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    CHECK(m.triangle_area(t) > 0.0);
    area += m.triangle_area(t);
  }
  CHECK(area == doctest::Approx(m.boundary_enclosed_area()).epsilon(1e-12));
  double perimeter = 0.0;
  for (std::size_t e = 0; e < m.num_boundary_edges(); ++e) {
    const auto& be = m.boundary_edges()[e];
    perimeter += be.length;
    const auto& tri = m.triangles()[static_cast<std::size_t>(be.triangle)];
    const Point centroid = (m.vertices()[tri[0]] + m.vertices()[tri[1]] + m.vertices()[tri[2]]) / 3.0;
    CHECK(be.normal.dot(centroid - m.edge_midpoint(e)) < 0.0);
    CHECK(be.normal.norm() == doctest::Approx(1.0));
    // closed loop: each edge ends where the next one starts (single loop generators)
    const auto& next = m.boundary_edges()[(e + 1) % m.num_boundary_edges()];
    CHECK(be.v[1] == next.v[0]);
  }
  CHECK(perimeter == doctest::Approx(m.perimeter()).epsilon(1e-14));
}

}  // namespace

TEST_CASE("square counts") {
  const Mesh m1 = generate_square(1);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_triangles() == 2);
  CHECK(m1.num_boundary_edges() == 4);
  CHECK(m1.perimeter() == doctest::Approx(4.0));

  const Mesh m2 = generate_square(2);
  CHECK(m2.num_vertices() == 9);
  CHECK(m2.num_triangles() == 8);
  CHECK(m2.num_boundary_edges() == 8);

  const Mesh m16 = generate_square(16);
  CHECK(std::abs(m16.perimeter() - 4.0) < 1e-14);
  CHECK(std::abs(m16.area() - 1.0) < 1e-14);
  for (const auto& e : m16.boundary_edges()) CHECK(e.length == doctest::Approx(1.0 / 16));
  check_invariants(m16);
  CHECK_THROWS_AS(generate_square(0), InputError);
}

TEST_CASE("disk geometry") {
  const Mesh fan = generate_disk(3, 1);
  CHECK(fan.num_vertices() == 4);
  CHECK(fan.num_triangles() == 3);

  const Mesh m = generate_disk(64, 16);
  CHECK(m.num_boundary_edges() == 64);
  CHECK(m.perimeter() == doctest::Approx(6.28066231).epsilon(1e-8));
  CHECK(m.perimeter() == doctest::Approx(oracle::polygon_perimeter(64)).epsilon(1e-13));
  CHECK(m.area() == doctest::Approx(oracle::polygon_area(64)).epsilon(1e-12));
  check_invariants(m);
  check_invariants(generate_disk(7, 3));

  // Perimeter error decays like n^-2.
  const double e128 = 2 * oracle::pi - generate_disk(128, 4).perimeter();
  const double e256 = 2 * oracle::pi - generate_disk(256, 4).perimeter();
  CHECK(e128 / e256 == doctest::Approx(4.0).epsilon(1e-3));

  CHECK_THROWS_AS(generate_disk(2, 1), InputError);
  CHECK_THROWS_AS(generate_disk(8, 0), InputError);
}

TEST_CASE("stretch keeps invariants") {
  const Mesh m = stretch(generate_disk(32, 6), 1.5, 0.75);
  check_invariants(m);
  CHECK(m.area() == doctest::Approx(1.5 * 0.75 * oracle::polygon_area(32)));
  CHECK_THROWS_AS(stretch(m, -1.0, 1.0), InputError);
}

TEST_CASE("serialize round trip") {
  for (const Mesh& m : {generate_square(1), generate_square(5), generate_disk(12, 3)}) {
    const Mesh back = load_mesh(serialize_mesh(m));
    REQUIRE(back.num_vertices() == m.num_vertices());
    for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(back.vertices()[i] == m.vertices()[i]);
    CHECK(back.triangles() == m.triangles());
    REQUIRE(back.num_boundary_edges() == m.num_boundary_edges());
    for (std::size_t e = 0; e < m.num_boundary_edges(); ++e) {
      CHECK(back.boundary_edges()[e].v == m.boundary_edges()[e].v);
    }
  }
}

TEST_CASE("load_mesh errors") {
  const std::string ok = "robinmesh 1\nV 4\n0 0\n1 0\n1 1\n0 1\nT 2\n0 1 2\n0 2 3\nB 4\n0 1\n1 2\n2 3\n3 0\n";
  CHECK(load_mesh(ok).num_triangles() == 2);

  SUBCASE("negative orientation") {
    const std::string bad = "robinmesh 1\nV 4\n0 0\n1 0\n1 1\n0 1\nT 2\n0 2 1\n0 2 3\nB 4\n0 1\n1 2\n2 3\n3 0\n";
    CHECK_THROWS_WITH_AS(load_mesh(bad), doctest::Contains("orientation"), InputError);
  }
  SUBCASE("declared boundary edge shared by two triangles") {
    const std::string bad = "robinmesh 1\nV 4\n0 0\n1 0\n1 1\n0 1\nT 2\n0 1 2\n0 2 3\nB 5\n0 1\n1 2\n2 3\n3 0\n0 2\n";
    CHECK_THROWS_WITH_AS(load_mesh(bad), doctest::Contains("non-manifold"), InputError);
  }
  SUBCASE("parse error carries a line number") {
    const std::string bad = "robinmesh 1\nV 4\n0 0\n1 x\n1 1\n0 1\nT 0\nB 0\n";
    CHECK_THROWS_WITH_AS(load_mesh(bad), doctest::Contains("line 4"), InputError);
  }
  SUBCASE("bad header") { CHECK_THROWS_AS(load_mesh("mesh 2\n"), InputError); }
}
