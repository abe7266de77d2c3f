#pragma once

// Exact-error norms against a manufactured solution:
//   ||(u,p) - (u_h,p_h)||_DG^2 = ||p - p_h||^2 + ||kappa (u - u_h)||^2
//       + sum_tau ||mu curl(u - u_h)||_tau^2 + sum_f alpha h_f^{-1} ||[[u_h]]||_f^2
// and the energy norm, which drops the ||p - p_h|| term.

#include <cmath>

#include "assembly.hpp"
#include "problems.hpp"
#include "space.hpp"

namespace amipdg {

struct ErrorNorms {
  double p_l2_sq = 0.0;     // ||p - p_h||^2
  double u_l2_sq = 0.0;     // ||kappa (u - u_h)||^2
  double curl_sq = 0.0;     // sum ||mu curl (u - u_h)||^2
  double jump_sq = 0.0;     // sum alpha h_f^{-1} ||[[u_h]]||^2

  double dg() const { return std::sqrt(p_l2_sq + u_l2_sq + curl_sq + jump_sq); }
  double energy() const { return std::sqrt(u_l2_sq + curl_sq + jump_sq); }
};

/// The exact tangential jump vanishes, so the jump term only sees u_h.
inline ErrorNorms exact_errors(const ManufacturedProblem& problem, const DiscreteSolution& sol,
                               double alpha) {
  if (sol.u.space().mesh_ptr() != sol.p.space().mesh_ptr())
    throw std::invalid_argument("exact_errors: u_h and p_h live on different meshes");
  if (!(alpha > 0.0)) throw std::invalid_argument("exact_errors: alpha must be positive");
  const DGVectorSpace& space = sol.u.space();
  const TetMesh& mesh = space.mesh();
  const ElementCoefficients coeff = sample_coefficients(space, problem.coefficients);
  const int order = data_order(space.degree());
  const TetRule& rule = tet_rule(order);

  std::vector<ErrorNorms> elem(mesh.num_tets());
  parallel_chunks(mesh.num_tets(), [&](int, int begin, int end) {
    Eigen::VectorXd phi;
    Eigen::MatrixXd grads;
    for (int e = begin; e < end; ++e) {
      const double det = space.geometry(e).det;
      ErrorNorms& n = elem[e];
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Eigen::Vector3d xi = rule.reference_point(q);
        const Point x = space.to_physical(e, xi);
        space.evaluate(e, xi, phi, grads);
        const double w = rule.weights[q] * det;
        n.p_l2_sq += w * (problem.exact_p(x) - detail::local_value(sol.p.local(e), phi)).squaredNorm();
        n.u_l2_sq += w * (coeff.kappa[e] * (problem.exact_u(x) - detail::local_value(sol.u.local(e), phi)))
                             .squaredNorm();
        n.curl_sq += w * (coeff.mu[e] * (problem.exact_curl_u(x) - detail::local_curl(sol.u.local(e), grads)))
                             .squaredNorm();
      }
    }
  });

  std::vector<double> faces(mesh.num_faces(), 0.0);
  parallel_chunks(mesh.num_faces(), [&](int, int begin, int end) {
    Eigen::VectorXd phi;
    for (int f = begin; f < end; ++f) {
      const FaceQuadrature fq = face_quadrature(space, f, 2 * space.degree());
      double sum = 0.0;
      for (std::size_t q = 0; q < fq.points.size(); ++q) {
        Eigen::Vector3d jmp = Eigen::Vector3d::Zero();
        for (int s = 0; s < fq.sides(); ++s) {
          space.basis().evaluate(fq.reference[s][q], phi);
          jmp += detail::local_value(sol.u.local(fq.elements[s]), phi).cross(fq.side_normal(s));
        }
        sum += fq.weights[q] * jmp.squaredNorm();
      }
      faces[f] = alpha / mesh.face(f).diameter * sum;
    }
  });

  ErrorNorms total;
  for (const ErrorNorms& n : elem) {
    total.p_l2_sq += n.p_l2_sq;
    total.u_l2_sq += n.u_l2_sq;
    total.curl_sq += n.curl_sq;
  }
  for (double v : faces) total.jump_sq += v;
  return total;
}

inline double dg_norm_error(const DiscreteSolution& sol, const ManufacturedProblem& problem, double alpha) {
  return exact_errors(problem, sol, alpha).dg();
}

inline double energy_norm_error(const DiscreteSolution& sol, const ManufacturedProblem& problem,
                                double alpha) {
  return exact_errors(problem, sol, alpha).energy();
}

}  // namespace amipdg
