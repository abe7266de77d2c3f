#pragma once

// Residual a posteriori indicator
//   eta^2(tau) = ||R1||^2 + h_tau^2 (||R2||^2 + ||R3||^2)
//              + sum_{f in dtau} h_f (||J1||_f^2 + ||J2||_f^2)
// with R1 = p_h - mu curl u_h, R2 = f - curl p_h - kappa u_h,
// R3 = div(f - kappa u_h), J1 = [[p_h]], J2 = [[f - kappa u_h]].

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "parallel.hpp"
#include "problems.hpp"
#include "space.hpp"

namespace amipdg {

/// Face residuals carry h_f to this power; it must stay positive.
inline constexpr int kFaceWeightExponent = 1;
static_assert(kFaceWeightExponent > 0, "face residuals must not carry negative powers of h_f");

/// Weighted components of eta^2(tau).
struct IndicatorBreakdown {
  double r1 = 0.0;  // ||R1||^2
  double r2 = 0.0;  // h^2 ||R2||^2
  double r3 = 0.0;  // h^2 ||R3||^2
  double j1 = 0.0;  // sum_f h_f ||J1||^2
  double j2 = 0.0;  // sum_f h_f ||J2||^2

  double sum() const { return r1 + r2 + r3 + j1 + j2; }
};

struct IndicatorField {
  std::vector<double> per_element;  // eta^2(tau)
  std::vector<IndicatorBreakdown> breakdown;
  double total = 0.0;  // eta^2(T_h)

  double eta() const { return std::sqrt(total); }
};

namespace detail {

struct FaceResidual {
  double j1 = 0.0;
  double j2 = 0.0;
};

inline IndicatorBreakdown element_residuals(const DiscreteSolution& sol, const ManufacturedProblem& problem,
                                            const ElementCoefficients& coeff, int e) {
  const DGVectorSpace& space = sol.u.space();
  const TetRule& rule = tet_rule(data_order(space.degree()));
  const double det = space.geometry(e).det;
  const double h2 = std::pow(mesh_size(space.mesh(), e), 2);
  const double mu = coeff.mu[e];
  const double kappa = coeff.kappa[e];
  Eigen::VectorXd phi;
  Eigen::MatrixXd grads;
  IndicatorBreakdown out;
  double r2 = 0.0, r3 = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Eigen::Vector3d xi = rule.reference_point(q);
    const Point x = space.to_physical(e, xi);
    space.evaluate(e, xi, phi, grads);
    const Eigen::Vector3d u = local_value(sol.u.local(e), phi);
    const Eigen::Vector3d p = local_value(sol.p.local(e), phi);
    const Eigen::Vector3d curl_u = local_curl(sol.u.local(e), grads);
    const Eigen::Vector3d curl_p = local_curl(sol.p.local(e), grads);
    const double div_u = local_divergence(sol.u.local(e), grads);
    const double w = rule.weights[q] * det;
    out.r1 += w * (p - mu * curl_u).squaredNorm();
    r2 += w * (problem.rhs_f(x) - curl_p - kappa * u).squaredNorm();
    r3 += w * std::pow(problem.div_f(x) - kappa * div_u, 2);
  }
  out.r2 = h2 * r2;
  out.r3 = h2 * r3;
  return out;
}

inline FaceResidual face_residuals(const DiscreteSolution& sol, const ManufacturedProblem& problem,
                                   const ElementCoefficients& coeff, int f) {
  const DGVectorSpace& space = sol.u.space();
  const FaceQuadrature fq = face_quadrature(space, f, data_order(space.degree()));
  Eigen::VectorXd phi;
  double j1 = 0.0, j2 = 0.0;
  for (std::size_t q = 0; q < fq.points.size(); ++q) {
    const Eigen::Vector3d fx = problem.rhs_f(fq.points[q]);
    Eigen::Vector3d jump_p = Eigen::Vector3d::Zero();
    Eigen::Vector3d jump_data = Eigen::Vector3d::Zero();
    for (int s = 0; s < fq.sides(); ++s) {
      const int e = fq.elements[s];
      const Point n = fq.side_normal(s);
      space.basis().evaluate(fq.reference[s][q], phi);
      jump_p += local_value(sol.p.local(e), phi).cross(n);
      jump_data += (fx - coeff.kappa[e] * local_value(sol.u.local(e), phi)).cross(n);
    }
    j1 += fq.weights[q] * jump_p.squaredNorm();
    j2 += fq.weights[q] * jump_data.squaredNorm();
  }
  const double hf = std::pow(space.mesh().face(f).diameter, kFaceWeightExponent);
  return {hf * j1, hf * j2};
}

inline void check_solution(const DiscreteSolution& sol) {
  if (sol.u.space().mesh_ptr() != sol.p.space().mesh_ptr() ||
      sol.u.space().degree() != sol.p.space().degree())
    throw std::invalid_argument("u_h and p_h must live on the same mesh");
}

}  // namespace detail

/// All element indicators. Shared faces contribute to both neighbours.
inline IndicatorField compute_indicators(const DiscreteSolution& sol, const ManufacturedProblem& problem) {
  detail::check_solution(sol);
  const DGVectorSpace& space = sol.u.space();
  const TetMesh& mesh = space.mesh();
  const ElementCoefficients coeff = sample_coefficients(space, problem.coefficients);

  std::vector<detail::FaceResidual> faces(mesh.num_faces());
  parallel_chunks(mesh.num_faces(), [&](int, int begin, int end) {
    for (int f = begin; f < end; ++f) faces[f] = detail::face_residuals(sol, problem, coeff, f);
  });

  IndicatorField out;
  out.breakdown.resize(mesh.num_tets());
  out.per_element.resize(mesh.num_tets());
  parallel_chunks(mesh.num_tets(), [&](int, int begin, int end) {
    for (int e = begin; e < end; ++e) {
      IndicatorBreakdown b = detail::element_residuals(sol, problem, coeff, e);
      for (int f : mesh.tet_faces(e)) {
        b.j1 += faces[f].j1;
        b.j2 += faces[f].j2;
      }
      out.breakdown[e] = b;
      out.per_element[e] = b.sum();
    }
  });
  for (double v : out.per_element) out.total += v;
  return out;
}

/// eta^2(tau) for a single element.
inline double element_indicator(int e, const DiscreteSolution& sol, const ManufacturedProblem& problem) {
  detail::check_solution(sol);
  const DGVectorSpace& space = sol.u.space();
  if (e < 0 || e >= space.num_elements()) throw std::out_of_range("element index out of range");
  const ElementCoefficients coeff = sample_coefficients(space, problem.coefficients);
  IndicatorBreakdown b = detail::element_residuals(sol, problem, coeff, e);
  for (int f : space.mesh().tet_faces(e)) {
    const auto r = detail::face_residuals(sol, problem, coeff, f);
    b.j1 += r.j1;
    b.j2 += r.j2;
  }
  return b.sum();
}

/// eta^2 over a subset of elements.
inline double total_indicator(const IndicatorField& field, std::span<const int> subset) {
  double sum = 0.0;
  for (int e : subset) sum += field.per_element.at(e);
  return sum;
}

inline double total_indicator(std::span<const int> subset, const DiscreteSolution& sol,
                              const ManufacturedProblem& problem) {
  return total_indicator(compute_indicators(sol, problem), subset);
}

}  // namespace amipdg
