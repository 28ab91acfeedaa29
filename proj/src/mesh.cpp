#include "robinopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

#include "robinopt/error.hpp"

namespace robinopt {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::pair<int, int> key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<std::array<int, 2>> declared_boundary)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = static_cast<int>(vertices_.size());
  if (nv < 3 || triangles_.empty()) throw InputError("mesh: need at least 3 vertices and 1 triangle");

  struct EdgeUse {
    int count = 0;
    int from = -1, to = -1;  // orientation inside the (last) owning triangle
    int triangle = -1;
  };
  std::map<std::pair<int, int>, EdgeUse> uses;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= nv) {
        throw InputError("mesh: triangle " + std::to_string(t) + " references vertex " + std::to_string(v) +
                         " out of range");
      }
    }
    const double a = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (!(a > 0.0)) {
      throw InputError("mesh: orientation error, triangle " + std::to_string(t) +
                       " has non-positive signed area " + std::to_string(a));
    }
    for (int k = 0; k < 3; ++k) {
      const int from = tri[k];
      const int to = tri[(k + 1) % 3];
      auto& use = uses[key(from, to)];
      ++use.count;
      use.from = from;
      use.to = to;
      use.triangle = static_cast<int>(t);
    }
  }

  std::map<std::pair<int, int>, const EdgeUse*> boundary;
  for (const auto& [k, use] : uses) {
    if (use.count > 2) {
      throw InputError("mesh: non-manifold edge (" + std::to_string(k.first) + ", " + std::to_string(k.second) +
                       ") shared by " + std::to_string(use.count) + " triangles");
    }
    if (use.count == 1) boundary.emplace(k, &use);
  }
  if (boundary.empty()) throw InputError("mesh: no boundary edges");

  std::vector<std::array<int, 2>> ordered;
  if (!declared_boundary.empty()) {
    std::map<std::pair<int, int>, int> seen;
    for (const auto& e : declared_boundary) {
      const auto it = uses.find(key(e[0], e[1]));
      if (it == uses.end()) {
        throw InputError("mesh: declared boundary edge (" + std::to_string(e[0]) + ", " + std::to_string(e[1]) +
                         ") is not a triangle edge");
      }
      if (it->second.count != 1) {
        throw InputError("mesh: non-manifold boundary, declared edge (" + std::to_string(e[0]) + ", " +
                         std::to_string(e[1]) + ") is shared by " + std::to_string(it->second.count) +
                         " triangles");
      }
      if (it->second.from != e[0]) {
        throw InputError("mesh: declared boundary edge (" + std::to_string(e[0]) + ", " + std::to_string(e[1]) +
                         ") is not counterclockwise");
      }
      if (++seen[key(e[0], e[1])] > 1) throw InputError("mesh: duplicated boundary edge");
      ordered.push_back(e);
    }
    if (ordered.size() != boundary.size()) {
      throw InputError("mesh: declared " + std::to_string(ordered.size()) + " boundary edges but the triangulation has " +
                       std::to_string(boundary.size()));
    }
  } else {
    // Chain loops, each one starting from its smallest unvisited vertex.
    std::map<int, std::pair<int, int>> next;  // from -> (to, count)
    for (const auto& [k, use] : boundary) {
      auto& slot = next[use->from];
      slot.first = use->to;
      ++slot.second;
    }
    std::map<int, bool> visited;
    for (const auto& [from, slot] : next) {
      if (visited[from]) continue;
      int v = from;
      do {
        const auto it = next.find(v);
        if (it == next.end() || it->second.second != 1) {
          throw InputError("mesh: non-manifold boundary at vertex " + std::to_string(v));
        }
        visited[v] = true;
        ordered.push_back({v, it->second.first});
        v = it->second.first;
      } while (v != from && !visited[v]);
      if (v != from) throw InputError("mesh: boundary loop through vertex " + std::to_string(from) + " does not close");
    }
  }

  // Closed loops: every boundary vertex has exactly one outgoing and one incoming edge.
  std::map<int, std::pair<int, int>> degree;
  for (const auto& e : ordered) {
    ++degree[e[0]].first;
    ++degree[e[1]].second;
  }
  for (const auto& [v, d] : degree) {
    if (d.first != 1 || d.second != 1) {
      throw InputError("mesh: non-manifold boundary at vertex " + std::to_string(v));
    }
  }

  boundary_flag_.assign(vertices_.size(), false);
  edges_.reserve(ordered.size());
  for (const auto& e : ordered) {
    BoundaryEdge be;
    be.v = e;
    const Point d = vertices_[e[1]] - vertices_[e[0]];
    be.length = d.norm();
    be.normal = Point(d.y(), -d.x()) / be.length;
    be.triangle = boundary.at(key(e[0], e[1]))->triangle;
    edges_.push_back(be);
    boundary_flag_[e[0]] = true;
    boundary_flag_[e[1]] = true;
  }
  for (int v = 0; v < nv; ++v) {
    if (boundary_flag_[v]) boundary_vertices_.push_back(v);
  }
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double Mesh::area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += triangle_area(t);
  return s;
}

double Mesh::perimeter() const {
  double s = 0.0;
  for (const auto& e : edges_) s += e.length;
  return s;
}

double Mesh::boundary_enclosed_area() const {
  double s = 0.0;
  for (const auto& e : edges_) {
    const Point& a = vertices_[e.v[0]];
    const Point& b = vertices_[e.v[1]];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

double Mesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) h = std::max(h, (vertices_[tri[k]] - vertices_[tri[(k + 1) % 3]]).norm());
  }
  return h;
}

std::vector<double> Mesh::edge_midpoint_arclength() const {
  std::vector<double> s(edges_.size());
  double acc = 0.0;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    s[e] = acc + 0.5 * edges_[e].length;
    acc += edges_[e].length;
  }
  return s;
}

Point Mesh::edge_midpoint(std::size_t e) const {
  return 0.5 * (vertices_[edges_[e].v[0]] + vertices_[edges_[e].v[1]]);
}

Mesh generate_square(int n) {
  if (n < 1) throw InputError("generate_square: n must be >= 1, got " + std::to_string(n));
  const int m = n + 1;
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(m * m));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  }
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = j * m + i, v10 = v00 + 1, v01 = v00 + m, v11 = v01 + 1;
      // Alternating diagonals keep the mesh symmetric under both axis reflections when n is even.
      if ((i + j) % 2 == 0) {
        triangles.push_back({v00, v10, v11});
        triangles.push_back({v00, v11, v01});
      } else {
        triangles.push_back({v00, v10, v01});
        triangles.push_back({v10, v11, v01});
      }
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh generate_disk(int n_boundary, int n_rings) {
  if (n_boundary < 3) throw InputError("generate_disk: n_boundary must be >= 3, got " + std::to_string(n_boundary));
  if (n_rings < 1) throw InputError("generate_disk: n_rings must be >= 1, got " + std::to_string(n_rings));

  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Point> vertices{Point::Zero()};
  std::vector<int> ring_start, ring_count;
  for (int k = 1; k <= n_rings; ++k) {
    const int count = (k == n_rings)
                          ? n_boundary
                          : std::max(3, static_cast<int>(std::lround(static_cast<double>(n_boundary) * k / n_rings)));
    const double r = static_cast<double>(k) / n_rings;
    ring_start.push_back(static_cast<int>(vertices.size()));
    ring_count.push_back(count);
    for (int i = 0; i < count; ++i) {
      const double theta = two_pi * i / count;
      vertices.emplace_back(r * std::cos(theta), r * std::sin(theta));
    }
  }

  std::vector<std::array<int, 3>> triangles;
  for (int i = 0; i < ring_count[0]; ++i) {
    triangles.push_back({0, ring_start[0] + i, ring_start[0] + (i + 1) % ring_count[0]});
  }
  for (std::size_t k = 1; k < ring_start.size(); ++k) {
    const int a = ring_count[k - 1], b = ring_count[k];
    const int s_in = ring_start[k - 1], s_out = ring_start[k];
    int i = 0, j = 0;
    while (i < a || j < b) {
      const double next_in = (i < a) ? two_pi * (i + 1) / a : 1e300;
      const double next_out = (j < b) ? two_pi * (j + 1) / b : 1e300;
      if (next_out <= next_in) {
        triangles.push_back({s_in + i % a, s_out + j % b, s_out + (j + 1) % b});
        ++j;
      } else {
        triangles.push_back({s_in + i % a, s_out + j % b, s_in + (i + 1) % a});
        ++i;
      }
    }
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

Mesh stretch(const Mesh& mesh, double sx, double sy) {
  if (!(sx > 0.0) || !(sy > 0.0)) throw InputError("stretch: factors must be positive");
  std::vector<Point> vertices = mesh.vertices();
  for (auto& p : vertices) p = Point(sx * p.x(), sy * p.y());
  std::vector<std::array<int, 2>> boundary;
  for (const auto& e : mesh.boundary_edges()) boundary.push_back(e.v);
  return Mesh(std::move(vertices), mesh.triangles(), std::move(boundary));
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  /// Next non-empty line split into tokens; throws at end of input.
  std::vector<std::string> next(const char* what) {
    while (pos_ < text_.size()) {
      const auto end = text_.find('\n', pos_);
      const auto line = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
      pos_ = (end == std::string_view::npos) ? text_.size() : end + 1;
      ++line_no_;
      std::istringstream in{std::string(line)};
      std::vector<std::string> tokens;
      for (std::string tok; in >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    throw InputError("mesh parse error at line " + std::to_string(line_no_ + 1) + ": unexpected end of input, expected " +
                     what);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("mesh parse error at line " + std::to_string(line_no_) + ": " + msg);
  }

  double to_double(const std::string& tok) const {
    try {
      std::size_t used = 0;
      const double x = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(x)) fail("invalid number '" + tok + "'");
      return x;
    } catch (const std::logic_error&) {
      fail("invalid number '" + tok + "'");
    }
  }

  long to_int(const std::string& tok) const {
    try {
      std::size_t used = 0;
      const long x = std::stol(tok, &used);
      if (used != tok.size()) fail("invalid integer '" + tok + "'");
      return x;
    } catch (const std::logic_error&) {
      fail("invalid integer '" + tok + "'");
    }
  }

  std::size_t section(const char* tag) {
    const auto tok = next(tag);
    if (tok.size() != 2 || tok[0] != tag) fail(std::string("expected '") + tag + " <count>'");
    const long count = to_int(tok[1]);
    if (count < 0) fail("negative count");
    return static_cast<std::size_t>(count);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

}  // namespace

Mesh load_mesh(std::string_view text) {
  LineReader in(text);
  const auto header = in.next("header");
  if (header.size() != 2 || header[0] != "robinmesh" || header[1] != "1") in.fail("expected header 'robinmesh 1'");

  const std::size_t nv = in.section("V");
  std::vector<Point> vertices;
  vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const auto tok = in.next("vertex");
    if (tok.size() != 2) in.fail("vertex line needs 2 coordinates");
    vertices.emplace_back(in.to_double(tok[0]), in.to_double(tok[1]));
  }

  const auto read_index = [&](const std::string& tok) {
    const long v = in.to_int(tok);
    if (v < 0 || static_cast<std::size_t>(v) >= nv) in.fail("vertex index " + tok + " out of range");
    return static_cast<int>(v);
  };

  const std::size_t nt = in.section("T");
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    const auto tok = in.next("triangle");
    if (tok.size() != 3) in.fail("triangle line needs 3 indices");
    triangles.push_back({read_index(tok[0]), read_index(tok[1]), read_index(tok[2])});
  }

  const std::size_t nb = in.section("B");
  std::vector<std::array<int, 2>> boundary;
  boundary.reserve(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto tok = in.next("boundary edge");
    if (tok.size() != 2) in.fail("boundary line needs 2 indices");
    boundary.push_back({read_index(tok[0]), read_index(tok[1])});
  }
  if (nb == 0) throw InputError("mesh: B section is empty");
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mesh file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_mesh(buf.str());
}

std::string serialize_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "robinmesh 1\n";
  out << "V " << mesh.num_vertices() << '\n';
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  out << "T " << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "B " << mesh.num_boundary_edges() << '\n';
  for (const auto& e : mesh.boundary_edges()) out << e.v[0] << ' ' << e.v[1] << '\n';
  return out.str();
}

}  // namespace robinopt
