#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace robinopt {

using Point = Eigen::Vector2d;

/// A boundary edge (a, b) traversed counterclockwise, so the domain lies on the left.
struct BoundaryEdge {
  std::array<int, 2> v{};
  double length = 0.0;
  Point normal = Point::Zero();  ///< outward unit normal
  int triangle = -1;             ///< owning triangle
};

/// Conforming triangulation of a 2D polygonal domain.
///
/// Boundary edges are kept in one global order (loop by loop, counterclockwise
/// around the outer loop), so edge-indexed fields are stable across runs.
/// Instances are immutable once built by one of the factory functions below.
class Mesh {
 public:
  Mesh() = default;

  /// Validates the triangulation and derives boundary data.
  ///
  /// `declared_boundary` lists boundary edges as vertex pairs; when non-empty
  /// it must coincide (as a set of oriented edges) with the edges owned by
  /// exactly one triangle. The stored order follows the declaration.
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<std::array<int, 2>> declared_boundary = {});

  [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const { return edges_; }
  /// Sorted indices of vertices lying on the boundary.
  [[nodiscard]] const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
  [[nodiscard]] bool is_boundary_vertex(int v) const { return boundary_flag_[static_cast<std::size_t>(v)]; }

  [[nodiscard]] std::size_t num_vertices() const { return vertices_.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles_.size(); }
  [[nodiscard]] std::size_t num_boundary_edges() const { return edges_.size(); }

  [[nodiscard]] double triangle_area(std::size_t t) const;
  [[nodiscard]] double area() const;
  [[nodiscard]] double perimeter() const;
  /// Area enclosed by the boundary loops (shoelace formula).
  [[nodiscard]] double boundary_enclosed_area() const;
  /// Longest triangle edge.
  [[nodiscard]] double max_edge_length() const;
  /// Arclength of each boundary edge midpoint, measured along the stored order.
  [[nodiscard]] std::vector<double> edge_midpoint_arclength() const;
  [[nodiscard]] Point edge_midpoint(std::size_t e) const;

 private:
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> edges_;
  std::vector<int> boundary_vertices_;
  std::vector<bool> boundary_flag_;
};

/// Structured triangulation of [0,1]^2 with n cells per side (each square split along its diagonal).
Mesh generate_square(int n);

/// Unit disk approximated by the inscribed regular `n_boundary`-gon.
///
/// Ring k (1..n_rings) at radius k/n_rings carries round(n_boundary*k/n_rings)
/// vertices (at least 3); ring 1 is fanned to the center and consecutive rings
/// are stitched by merging their angular orderings.
Mesh generate_disk(int n_boundary, int n_rings);

/// Applies (x, y) -> (sx*x, sy*y) to every vertex. Positive factors only.
Mesh stretch(const Mesh& mesh, double sx, double sy);

/// Parses the plain-text "robinmesh 1" format.
Mesh load_mesh(std::string_view text);
Mesh load_mesh_file(const std::string& path);

/// Writes the "robinmesh 1" format with round-trip exact (17 digit) coordinates.
std::string serialize_mesh(const Mesh& mesh);

}  // namespace robinopt
