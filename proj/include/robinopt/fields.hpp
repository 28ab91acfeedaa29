#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include <Eigen/Core>

#include "robinopt/mesh.hpp"

namespace robinopt {

using Vector = Eigen::VectorXd;

/// P1 nodal values, one per mesh vertex.
struct ScalarField {
  Vector values;

  ScalarField() = default;
  explicit ScalarField(Vector v) : values(std::move(v)) {}

  static ScalarField constant(const Mesh& mesh, double c) {
    return ScalarField(Vector::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), c));
  }
  static ScalarField interpolate(const Mesh& mesh, const std::function<double(const Point&)>& fn) {
    Vector v(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) v[static_cast<Eigen::Index>(i)] = fn(mesh.vertices()[i]);
    return ScalarField(std::move(v));
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values[static_cast<Eigen::Index>(i)]; }
};

/// Piecewise-constant values, one per boundary edge (in the mesh's boundary order).
struct BoundaryField {
  Vector values;

  BoundaryField() = default;
  explicit BoundaryField(Vector v) : values(std::move(v)) {}

  static BoundaryField constant(const Mesh& mesh, double c) {
    return BoundaryField(Vector::Constant(static_cast<Eigen::Index>(mesh.num_boundary_edges()), c));
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t e) const { return values[static_cast<Eigen::Index>(e)]; }
  double& operator[](std::size_t e) { return values[static_cast<Eigen::Index>(e)]; }
};

}  // namespace robinopt
