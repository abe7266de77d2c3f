#pragma once

// Collapsed-coordinate Gauss rules on the reference triangle and
// tetrahedron. Points are stored in barycentric form; weights sum to the
// reference measure (1/2 for the triangle, 1/6 for the tetrahedron).

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace amipdg {

template <int NumVertices>
struct QuadratureRule {
  std::vector<std::array<double, NumVertices>> points;  // barycentric
  std::vector<double> weights;
  int order = 0;

  std::size_t size() const { return weights.size(); }

  /// Reference (Cartesian) coordinates of point q: drops barycentric 0.
  Eigen::Matrix<double, NumVertices - 1, 1> reference_point(std::size_t q) const {
    Eigen::Matrix<double, NumVertices - 1, 1> xi;
    for (int d = 0; d < NumVertices - 1; ++d) xi[d] = points[q][d + 1];
    return xi;
  }
};

using TriangleRule = QuadratureRule<3>;
using TetRule = QuadratureRule<4>;

/// Gauss-Legendre nodes and weights on [0,1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);  // 2/((1-z^2)P'^2), halved for [0,1]
  }
  return {x, w};
}

/// Exact for polynomials of total degree <= order on the reference triangle.
inline TriangleRule make_triangle_rule(int order) {
  const int n = std::max(1, (order + 2 + 1) / 2);
  auto [x, w] = gauss_legendre(n);
  TriangleRule rule;
  rule.order = order;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = x[i];
      const double b = x[j] * (1.0 - a);
      rule.points.push_back({1.0 - a - b, a, b});
      rule.weights.push_back(w[i] * w[j] * (1.0 - a));
    }
  return rule;
}

/// Exact for polynomials of total degree <= order on the reference tetrahedron.
inline TetRule make_tet_rule(int order) {
  const int n = std::max(1, (order + 3 + 1) / 2);
  auto [x, w] = gauss_legendre(n);
  TetRule rule;
  rule.order = order;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double a = x[i];
        const double b = x[j] * (1.0 - a);
        const double c = x[k] * (1.0 - a - b);
        rule.points.push_back({1.0 - a - b - c, a, b, c});
        rule.weights.push_back(w[i] * w[j] * w[k] * (1.0 - a) * (1.0 - a) * (1.0 - x[j]));
      }
  return rule;
}

/// Process-wide cache; rules are immutable once built.
inline const TetRule& tet_rule(int order) {
  static std::mutex mutex;
  static std::map<int, TetRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make_tet_rule(order)).first;
  return it->second;
}

inline const TriangleRule& triangle_rule(int order) {
  static std::mutex mutex;
  static std::map<int, TriangleRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make_triangle_rule(order)).first;
  return it->second;
}

}  // namespace amipdg
