#pragma once

// Conforming tetrahedral meshes of polyhedral domains and longest-edge
// bisection with conforming closure.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace amipdg {

using Point = Eigen::Vector3d;

/// Local vertex pairs of the six tetrahedron edges.
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

struct Tetrahedron {
  std::array<int, 4> vertices;
  int refinement_edge = 0;  // index into kTetEdges
  int generation = 0;
};

/// Triangular face. `incident[1] == -1` on the boundary; otherwise
/// `incident[0] < incident[1]` and the face normal points from incident[0]
/// into incident[1].
struct Face {
  std::array<int, 3> vertices;
  std::array<int, 2> incident{-1, -1};
  bool boundary = true;
  double diameter = 0.0;  // circumcircle diameter h_f
  double area = 0.0;
  Point normal = Point::Zero();  // unit, outward from incident[0]
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct TripleHash {
  std::size_t operator()(const std::array<int, 3>& t) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int v : t) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

inline double signed_volume(const Point& a, const Point& b, const Point& c, const Point& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

inline double squared_length(const std::vector<Point>& verts, int a, int b) {
  if (a > b) std::swap(a, b);
  return (verts[b] - verts[a]).squaredNorm();
}

/// Longest edge of a tetrahedron; ties go to the lexicographically smallest
/// sorted global vertex pair so that neighbours agree on shared edges.
inline int longest_edge(const std::vector<Point>& verts, const std::array<int, 4>& tv) {
  int best = 0;
  double best_len = -1.0;
  std::pair<int, int> best_pair{0, 0};
  for (int e = 0; e < 6; ++e) {
    int a = tv[kTetEdges[e][0]];
    int b = tv[kTetEdges[e][1]];
    const double len = squared_length(verts, a, b);
    const std::pair<int, int> pair = std::minmax(a, b);
    if (len > best_len || (len == best_len && pair < best_pair)) {
      best = e;
      best_len = len;
      best_pair = pair;
    }
  }
  return best;
}

}  // namespace detail

/// Diameter of the circumscribed circle of a triangle.
inline double circumcircle_diameter(const Point& a, const Point& b, const Point& c) {
  const double la = (b - c).norm();
  const double lb = (a - c).norm();
  const double lc = (a - b).norm();
  const double area2 = (b - a).cross(c - a).norm();
  if (area2 <= 0.0) throw GeometryError("degenerate face");
  return la * lb * lc / area2;
}

class TetMesh {
 public:
  TetMesh() = default;

  /// Tetrahedra are reoriented to positive volume. Throws GeometryError on
  /// degenerate cells or on a face shared by more than two cells.
  TetMesh(std::vector<Point> vertices, const std::vector<std::array<int, 4>>& cells,
          const std::vector<int>& generations = {})
      : vertices_(std::move(vertices)) {
    tets_.reserve(cells.size());
    for (std::size_t t = 0; t < cells.size(); ++t) {
      Tetrahedron tet;
      tet.vertices = cells[t];
      for (int v : tet.vertices)
        if (v < 0 || v >= static_cast<int>(vertices_.size()))
          throw std::out_of_range("tetrahedron references unknown vertex");
      const auto& p = vertices_;
      double vol = detail::signed_volume(p[tet.vertices[0]], p[tet.vertices[1]],
                                         p[tet.vertices[2]], p[tet.vertices[3]]);
      if (vol < 0.0) {
        std::swap(tet.vertices[2], tet.vertices[3]);
        vol = -vol;
      }
      if (!(vol > 0.0)) throw GeometryError("degenerate tetrahedron " + std::to_string(t));
      tet.refinement_edge = detail::longest_edge(vertices_, tet.vertices);
      tet.generation = generations.empty() ? 0 : generations[t];
      tets_.push_back(tet);
      volumes_.push_back(vol);
    }
    build_faces();
  }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Tetrahedron>& tets() const { return tets_; }
  const std::vector<Face>& faces() const { return faces_; }
  int num_tets() const { return static_cast<int>(tets_.size()); }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }

  const Tetrahedron& tet(int t) const { return tets_.at(t); }
  const Face& face(int f) const { return faces_.at(f); }
  const Point& vertex(int v) const { return vertices_[v]; }

  /// Face k of a tetrahedron is the one opposite local vertex k.
  const std::array<int, 4>& tet_faces(int t) const { return tet_to_faces_.at(t); }

  double volume(int t) const { return volumes_.at(t); }

  double total_volume() const {
    double sum = 0.0;
    for (double v : volumes_) sum += v;
    return sum;
  }

  Point centroid(int t) const {
    const auto& tv = tets_.at(t).vertices;
    return 0.25 * (vertices_[tv[0]] + vertices_[tv[1]] + vertices_[tv[2]] + vertices_[tv[3]]);
  }

  /// Longest edge length.
  double diameter(int t) const {
    const auto& tv = tets_.at(t).vertices;
    const auto& e = kTetEdges[tets_[t].refinement_edge];
    return std::sqrt(detail::squared_length(vertices_, tv[e[0]], tv[e[1]]));
  }

 private:
  void build_faces() {
    std::unordered_map<std::array<int, 3>, int, detail::TripleHash> lookup;
    lookup.reserve(tets_.size() * 3);
    tet_to_faces_.resize(tets_.size());
    for (int t = 0; t < num_tets(); ++t) {
      const auto& tv = tets_[t].vertices;
      for (int k = 0; k < 4; ++k) {
        std::array<int, 3> fv{};
        for (int j = 0, n = 0; j < 4; ++j)
          if (j != k) fv[n++] = tv[j];
        std::array<int, 3> key = fv;
        std::sort(key.begin(), key.end());
        auto [it, inserted] = lookup.try_emplace(key, num_faces());
        if (inserted) {
          Face f;
          f.vertices = key;
          f.incident = {t, -1};
          faces_.push_back(f);
        } else {
          Face& f = faces_[it->second];
          if (f.incident[1] != -1)
            throw GeometryError("face shared by more than two tetrahedra");
          f.incident[1] = t;
          f.boundary = false;
        }
        tet_to_faces_[t][k] = it->second;
      }
    }
    for (Face& f : faces_) {
      const Point& a = vertices_[f.vertices[0]];
      const Point& b = vertices_[f.vertices[1]];
      const Point& c = vertices_[f.vertices[2]];
      Point n = (b - a).cross(c - a);
      f.area = 0.5 * n.norm();
      f.diameter = circumcircle_diameter(a, b, c);
      n.normalize();
      // orient away from the opposite vertex of incident[0]
      const auto& tv = tets_[f.incident[0]].vertices;
      for (int v : tv) {
        if (v != f.vertices[0] && v != f.vertices[1] && v != f.vertices[2]) {
          if (n.dot(vertices_[v] - a) > 0.0) n = -n;
          break;
        }
      }
      f.normal = n;
    }
  }

  std::vector<Point> vertices_;
  std::vector<Tetrahedron> tets_;
  std::vector<double> volumes_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 4>> tet_to_faces_;
};

/// Unit cube [0,1]^3 split into M^3 cubes, each cut into six tetrahedra
/// sharing the cube diagonal (Kuhn subdivision).
inline TetMesh build_unit_cube_mesh(int M) {
  if (M < 1) throw std::invalid_argument("build_unit_cube_mesh: M must be >= 1");
  const int n = M + 1;
  std::vector<Point> verts;
  verts.reserve(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        verts.emplace_back(static_cast<double>(i) / M, static_cast<double>(j) / M,
                           static_cast<double>(k) / M);
  auto id = [n](int i, int j, int k) { return i + n * (j + n * k); };

  // Each tetrahedron follows a monotone lattice path from (0,0,0) to (1,1,1).
  static constexpr std::array<std::array<int, 3>, 6> kPerms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<std::array<int, 4>> cells;
  cells.reserve(6 * static_cast<std::size_t>(M) * M * M);
  for (int k = 0; k < M; ++k)
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i)
        for (const auto& perm : kPerms) {
          std::array<int, 3> c{i, j, k};
          std::array<int, 4> tet{};
          tet[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            tet[s + 1] = id(c[0], c[1], c[2]);
          }
          cells.push_back(tet);
        }
  return TetMesh(std::move(verts), cells);
}

/// h_tau = |tau|^{1/3}.
inline double mesh_size(const TetMesh& mesh, int t) {
  const double vol = mesh.volume(t);
  if (!(vol > 0.0)) throw GeometryError("mesh_size: degenerate tetrahedron");
  return std::cbrt(vol);
}

/// Same quantity for a free-standing tetrahedron.
inline double mesh_size(const std::array<Point, 4>& v) {
  const double vol = std::abs(detail::signed_volume(v[0], v[1], v[2], v[3]));
  if (!(vol > 0.0)) throw GeometryError("mesh_size: degenerate tetrahedron");
  return std::cbrt(vol);
}

/// Smallest of the six dihedral angles (radians).
inline double min_dihedral_angle(const TetMesh& mesh, int t) {
  const auto& tv = mesh.tet(t).vertices;
  std::array<Point, 4> p;
  for (int i = 0; i < 4; ++i) p[i] = mesh.vertex(tv[i]);
  double best = std::numbers::pi;
  for (const auto& e : kTetEdges) {
    std::array<int, 2> other{};
    for (int i = 0, n = 0; i < 4; ++i)
      if (i != e[0] && i != e[1]) other[n++] = i;
    const Point axis = (p[e[1]] - p[e[0]]).normalized();
    Point u = p[other[0]] - p[e[0]];
    Point w = p[other[1]] - p[e[0]];
    u -= u.dot(axis) * axis;
    w -= w.dot(axis) * axis;
    const double c = std::clamp(u.normalized().dot(w.normalized()), -1.0, 1.0);
    best = std::min(best, std::acos(c));
  }
  return best;
}

/// Output of one refinement step. `ancestor[t]` is the tetrahedron of the
/// input mesh containing new tetrahedron t; `refined[s]` flags input
/// tetrahedra that were split (the refined set R).
struct Refinement {
  TetMesh mesh;
  std::vector<int> ancestor;
  std::vector<bool> refined;
};

/// Bisects every marked tetrahedron once at its longest edge, then closes
/// the mesh by longest-edge bisection of every tetrahedron that carries a
/// hanging midpoint. Fails if closure needs more than `max_depth` sweeps.
inline Refinement bisect(const TetMesh& mesh, std::span<const int> marked, int max_depth = 100) {
  struct Cell {
    std::array<int, 4> v;
    int ancestor;
    int generation;
  };
  std::vector<Point> verts = mesh.vertices();
  std::vector<Cell> cells;
  cells.reserve(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t)
    cells.push_back({mesh.tet(t).vertices, t, mesh.tet(t).generation});

  std::vector<char> split(cells.size(), 0);
  for (int t : marked) {
    if (t < 0 || t >= mesh.num_tets()) throw std::out_of_range("bisect: marked index out of range");
    split[t] = 1;
  }

  std::unordered_map<std::uint64_t, int> midpoints;
  auto has_split_edge = [&](const Cell& c) {
    for (const auto& e : kTetEdges)
      if (midpoints.count(detail::edge_key(c.v[e[0]], c.v[e[1]]))) return true;
    return false;
  };

  for (int sweep = 0;; ++sweep) {
    if (sweep > max_depth)
      throw GeometryError("bisect: conforming closure exceeded " + std::to_string(max_depth) +
                          " sweeps");
    std::vector<Cell> next;
    next.reserve(cells.size() + cells.size() / 4);
    bool changed = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Cell& cell = cells[c];
      if (!(split[c] || has_split_edge(cell))) {
        next.push_back(cell);
        continue;
      }
      changed = true;
      const int e = detail::longest_edge(verts, cell.v);
      const int la = kTetEdges[e][0];
      const int lb = kTetEdges[e][1];
      const int a = cell.v[la];
      const int b = cell.v[lb];
      auto [it, inserted] = midpoints.try_emplace(detail::edge_key(a, b), 0);
      if (inserted) {
        it->second = static_cast<int>(verts.size());
        const auto [lo, hi] = std::minmax(a, b);
        verts.push_back(0.5 * (verts[lo] + verts[hi]));
      }
      const int m = it->second;
      Cell first = cell;
      Cell second = cell;
      first.v[lb] = m;
      second.v[la] = m;
      first.generation = second.generation = cell.generation + 1;
      next.push_back(first);
      next.push_back(second);
    }
    if (!changed) break;
    cells = std::move(next);
    split.assign(cells.size(), 0);
  }

  Refinement out;
  std::vector<std::array<int, 4>> conn;
  std::vector<int> gens;
  conn.reserve(cells.size());
  gens.reserve(cells.size());
  out.ancestor.reserve(cells.size());
  out.refined.assign(mesh.num_tets(), false);
  for (const Cell& c : cells) {
    conn.push_back(c.v);
    gens.push_back(c.generation);
    out.ancestor.push_back(c.ancestor);
    if (c.generation != mesh.tet(c.ancestor).generation) out.refined[c.ancestor] = true;
  }
  out.mesh = TetMesh(std::move(verts), conn, gens);
  return out;
}

/// Boundary test for faces of meshes of [0,1]^3.
inline bool on_unit_cube_boundary(const TetMesh& mesh, const Face& f) {
  for (int axis = 0; axis < 3; ++axis)
    for (double plane : {0.0, 1.0}) {
      bool all = true;
      for (int v : f.vertices) all = all && mesh.vertex(v)[axis] == plane;
      if (all) return true;
    }
  return false;
}

/// Number of faces that have a single incident tetrahedron but do not lie
/// on the domain boundary, i.e. faces that expose a hanging node.
inline int count_nonconforming_faces(
    const TetMesh& mesh,
    const std::function<bool(const TetMesh&, const Face&)>& on_boundary = on_unit_cube_boundary) {
  int bad = 0;
  for (const Face& f : mesh.faces())
    if (f.boundary && !on_boundary(mesh, f)) ++bad;
  return bad;
}

}  // namespace amipdg
