#pragma once

// Manufactured solutions of curl(mu curl u) + kappa u = f on [0,1]^3 with
// u x n = 0 on the boundary. Right-hand sides are in closed form.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "mesh.hpp"

namespace amipdg {

using VectorField = std::function<Eigen::Vector3d(const Point&)>;
using ScalarField = std::function<double(const Point&)>;

/// Piecewise-constant material data, sampled once per element (at the
/// centroid), so each must be constant on every cell of the initial mesh.
struct Coefficients {
  ScalarField mu = [](const Point&) { return 1.0; };
  ScalarField kappa = [](const Point&) { return 1.0; };
};

struct ManufacturedProblem {
  std::string name;
  VectorField exact_u;
  VectorField exact_curl_u;
  VectorField rhs_f;
  ScalarField div_f;
  Coefficients coefficients;

  /// p = mu curl u.
  Eigen::Vector3d exact_p(const Point& x) const { return coefficients.mu(x) * exact_curl_u(x); }
};

namespace detail {

struct Poly1 {  // t(t-1)
  static double f(double t) { return t * (t - 1.0); }
  static double d1(double t) { return 2.0 * t - 1.0; }
  static double d2(double) { return 2.0; }
};

struct Sine1 {  // sin(pi t)
  static double f(double t) { return std::sin(std::numbers::pi * t); }
  static double d1(double t) { return std::numbers::pi * std::cos(std::numbers::pi * t); }
  static double d2(double t) { return -std::numbers::pi * std::numbers::pi * f(t); }
};

struct Exp1 {  // (1 - e^t)(1 - e^{t-1})
  static double f(double t) { return (1.0 - std::exp(t)) * (1.0 - std::exp(t - 1.0)); }
  static double d1(double t) { return -std::exp(t) - std::exp(t - 1.0) + 2.0 * std::exp(2.0 * t - 1.0); }
  static double d2(double t) { return -std::exp(t) - std::exp(t - 1.0) + 4.0 * std::exp(2.0 * t - 1.0); }
};

/// Value, gradient and Hessian of the separable product F(x)F(y)F(z).
template <class F>
struct Product {
  double value;
  Eigen::Vector3d grad;
  Eigen::Matrix3d hess;

  explicit Product(const Point& x) {
    Eigen::Vector3d v, d, dd;
    for (int k = 0; k < 3; ++k) {
      v[k] = F::f(x[k]);
      d[k] = F::d1(x[k]);
      dd[k] = F::d2(x[k]);
    }
    value = v.prod();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double h = 1.0;
        for (int k = 0; k < 3; ++k) h *= (k == i && k == j) ? dd[k] : (k == i || k == j) ? d[k] : v[k];
        hess(i, j) = h;
      }
    for (int i = 0; i < 3; ++i) grad[i] = d[i] * v[(i + 1) % 3] * v[(i + 2) % 3];
  }
};

}  // namespace detail

/// Smooth solution (x(x-1)y(y-1)z(z-1), sin(pi x)sin(pi y)sin(pi z),
/// prod (1-e^t)(1-e^{t-1})) with mu = kappa = 1.
inline ManufacturedProblem example1() {
  using detail::Exp1;
  using detail::Poly1;
  using detail::Product;
  using detail::Sine1;
  ManufacturedProblem p;
  p.name = "example1";
  p.exact_u = [](const Point& x) {
    return Eigen::Vector3d(Product<Poly1>(x).value, Product<Sine1>(x).value, Product<Exp1>(x).value);
  };
  p.exact_curl_u = [](const Point& x) {
    const Product<Poly1> a(x);
    const Product<Sine1> b(x);
    const Product<Exp1> c(x);
    return Eigen::Vector3d(c.grad[1] - b.grad[2], a.grad[2] - c.grad[0], b.grad[0] - a.grad[1]);
  };
  // curl curl u = grad div u - lap u
  p.rhs_f = [](const Point& x) {
    const Product<Poly1> a(x);
    const Product<Sine1> b(x);
    const Product<Exp1> c(x);
    const Eigen::Vector3d grad_div = a.hess.col(0) + b.hess.col(1) + c.hess.col(2);
    const Eigen::Vector3d lap(a.hess.trace(), b.hess.trace(), c.hess.trace());
    const Eigen::Vector3d u(a.value, b.value, c.value);
    return Eigen::Vector3d(grad_div - lap + u);
  };
  p.div_f = [](const Point& x) {
    return Product<Poly1>(x).grad[0] + Product<Sine1>(x).grad[1] + Product<Exp1>(x).grad[2];
  };
  return p;
}

/// Solution g(x)(1, 1, -1) with g = x(x-1)y(y-1)z(z-1) / (|x|^2 + 0.001),
/// sharply peaked near the origin; mu = kappa = 1.
inline ManufacturedProblem example2() {
  struct G {
    double value;
    Eigen::Vector3d grad;
    Eigen::Matrix3d hess;
    explicit G(const Point& x) {
      const detail::Product<detail::Poly1> n(x);
      const double d = x.squaredNorm() + 0.001;
      const Eigen::Vector3d dd = 2.0 * x;
      value = n.value / d;
      grad = n.grad / d - n.value * dd / (d * d);
      hess = n.hess / d - (n.grad * dd.transpose() + dd * n.grad.transpose()) / (d * d) -
             n.value * 2.0 * Eigen::Matrix3d::Identity() / (d * d) +
             2.0 * n.value * dd * dd.transpose() / (d * d * d);
    }
  };
  static const Eigen::Vector3d a(1.0, 1.0, -1.0);
  ManufacturedProblem p;
  p.name = "example2";
  p.exact_u = [](const Point& x) { return Eigen::Vector3d(G(x).value * a); };
  p.exact_curl_u = [](const Point& x) { return Eigen::Vector3d(G(x).grad.cross(a)); };
  // curl curl (g a) = H a - a lap g
  p.rhs_f = [](const Point& x) {
    const G g(x);
    return Eigen::Vector3d(g.hess * a - a * g.hess.trace() + g.value * a);
  };
  p.div_f = [](const Point& x) { return G(x).grad.dot(a); };
  return p;
}

inline ManufacturedProblem problem_by_name(const std::string& name) {
  if (name == "example1") return example1();
  if (name == "example2") return example2();
  throw std::invalid_argument("unknown problem id '" + name + "'");
}

}  // namespace amipdg
