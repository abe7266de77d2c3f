#pragma once

// Symmetric interior penalty system for curl(mu curl u) + kappa u = f, the
// equivalent mixed (p, u) saddle system, and the local recovery of
// p_h from u_h.

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "parallel.hpp"
#include "problems.hpp"
#include "space.hpp"

namespace amipdg {

enum class SystemKind { primal, mixed };

inline std::string to_string(SystemKind kind) {
  return kind == SystemKind::primal ? "primal IPDG" : "mixed saddle-point";
}

struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  SystemKind kind = SystemKind::primal;
};

inline constexpr double kDefaultPenalty = 100.0;

/// Quadrature order for integrands containing problem data.
inline int data_order(int degree) { return std::max(6, 2 * degree); }

/// mu and kappa sampled at element centroids.
struct ElementCoefficients {
  std::vector<double> mu;
  std::vector<double> kappa;
};

inline ElementCoefficients sample_coefficients(const DGVectorSpace& space, const Coefficients& c) {
  ElementCoefficients out;
  const TetMesh& mesh = space.mesh();
  out.mu.resize(mesh.num_tets());
  out.kappa.resize(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const Point x = mesh.centroid(t);
    out.mu[t] = c.mu(x);
    out.kappa[t] = c.kappa(x);
    if (!(out.mu[t] > 0.0) || !(out.kappa[t] > 0.0))
      throw std::invalid_argument("coefficients must be strictly positive");
  }
  return out;
}

namespace detail {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Columns are the local vector basis functions phi_i e_c (k = c nb + i).
inline void vector_values(const Eigen::VectorXd& phi, Matrix3X& out) {
  const int nb = static_cast<int>(phi.size());
  out.setZero(3, 3 * nb);
  for (int c = 0; c < 3; ++c) out.row(c).segment(c * nb, nb) = phi.transpose();
}

inline void vector_curls(const Eigen::MatrixXd& grads, Matrix3X& out) {
  const int nb = static_cast<int>(grads.rows());
  out.resize(3, 3 * nb);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < nb; ++i) out.col(c * nb + i) = basis_curl(grads, i, c);
}

/// phi_i (e_c x n).
inline void vector_jumps(const Eigen::VectorXd& phi, const Point& n, Matrix3X& out) {
  const int nb = static_cast<int>(phi.size());
  out.resize(3, 3 * nb);
  for (int c = 0; c < 3; ++c) {
    const Eigen::Vector3d ec = Eigen::Vector3d::Unit(c).cross(n);
    for (int i = 0; i < nb; ++i) out.col(c * nb + i) = phi[i] * ec;
  }
}

/// Trace data of all local basis functions of the incident elements at one
/// face quadrature point; columns of side s start at s * dofs_per_element.
struct FacePointBasis {
  double weight = 0.0;
  Matrix3X jump;       // [[phi]]
  Matrix3X avg_value;  // {{mu phi}}
  Matrix3X avg_curl;   // {{mu curl phi}}
};

template <class Fn>
void for_each_face_point(const DGVectorSpace& space, const ElementCoefficients& coeff,
                         const FaceQuadrature& fq, Fn&& fn) {
  const int dpe = space.dofs_per_element();
  const int sides = fq.sides();
  const double omega = fq.boundary ? 1.0 : 0.5;
  FacePointBasis pb;
  Eigen::VectorXd phi;
  Eigen::MatrixXd grads;
  Matrix3X vals, curls, jumps;
  for (std::size_t q = 0; q < fq.points.size(); ++q) {
    pb.weight = fq.weights[q];
    pb.jump.setZero(3, sides * dpe);
    pb.avg_value.setZero(3, sides * dpe);
    pb.avg_curl.setZero(3, sides * dpe);
    for (int s = 0; s < sides; ++s) {
      const int e = fq.elements[s];
      space.evaluate(e, fq.reference[s][q], phi, grads);
      vector_values(phi, vals);
      vector_curls(grads, curls);
      vector_jumps(phi, fq.side_normal(s), jumps);
      const double w = omega * coeff.mu[e];
      pb.jump.middleCols(s * dpe, dpe) = jumps;
      pb.avg_value.middleCols(s * dpe, dpe) = w * vals;
      pb.avg_curl.middleCols(s * dpe, dpe) = w * curls;
    }
    fn(pb);
  }
}

inline void add_block(std::vector<Eigen::Triplet<double>>& out, int row0, int col0,
                      const Eigen::MatrixXd& block) {
  for (int j = 0; j < block.cols(); ++j)
    for (int i = 0; i < block.rows(); ++i)
      if (block(i, j) != 0.0) out.emplace_back(row0 + i, col0 + j, block(i, j));
}

/// Adds a face block whose rows/cols are side-concatenated local dofs.
inline void add_face_block(std::vector<Eigen::Triplet<double>>& out, const DGVectorSpace& space,
                           const FaceQuadrature& fq, int row_shift, int col_shift,
                           const Eigen::MatrixXd& block) {
  const int dpe = space.dofs_per_element();
  for (int a = 0; a < fq.sides(); ++a)
    for (int b = 0; b < fq.sides(); ++b)
      add_block(out, row_shift + space.offset(fq.elements[a]), col_shift + space.offset(fq.elements[b]),
                block.block(a * dpe, b * dpe, dpe, dpe));
}

/// Runs fn(triplets, item) over [0, n) in parallel and merges the triplet
/// lists in index order.
template <class Fn>
std::vector<Eigen::Triplet<double>> collect_triplets(int n, Fn&& fn) {
  std::vector<std::vector<Eigen::Triplet<double>>> parts(chunk_count(n));
  parallel_chunks(n, [&](int chunk, int begin, int end) {
    for (int i = begin; i < end; ++i) fn(parts[chunk], i);
  });
  std::vector<Eigen::Triplet<double>> all;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  all.reserve(total);
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

/// (f, phi) on one element.
inline Eigen::VectorXd element_load(const DGVectorSpace& space, const ManufacturedProblem& problem,
                                    int e) {
  const TetRule& rule = tet_rule(data_order(space.degree()));
  const double det = space.geometry(e).det;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.dofs_per_element());
  const int nb = space.scalar_size();
  Eigen::VectorXd phi;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Eigen::Vector3d xi = rule.reference_point(q);
    space.basis().evaluate(xi, phi);
    const Eigen::Vector3d f = problem.rhs_f(space.to_physical(e, xi));
    for (int c = 0; c < 3; ++c) load.segment(c * nb, nb) += rule.weights[q] * det * f[c] * phi;
  }
  return load;
}

/// (mu curl phi_a, curl phi_b) on one element.
inline Eigen::MatrixXd element_curl_curl(const DGVectorSpace& space, double mu, int e) {
  const TetRule& rule = tet_rule(std::max(1, 2 * (space.degree() - 1)));
  const double det = space.geometry(e).det;
  const int dpe = space.dofs_per_element();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dpe, dpe);
  Eigen::VectorXd phi;
  Eigen::MatrixXd grads;
  Matrix3X curls;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    space.evaluate(e, rule.reference_point(q), phi, grads);
    vector_curls(grads, curls);
    k.noalias() += rule.weights[q] * det * mu * curls.transpose() * curls;
  }
  return k;
}

/// (mu curl phi_u, psi_q): rows index psi, columns phi.
inline Eigen::MatrixXd element_curl_coupling(const DGVectorSpace& space, double mu, int e) {
  const TetRule& rule = tet_rule(2 * space.degree());
  const double det = space.geometry(e).det;
  const int dpe = space.dofs_per_element();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dpe, dpe);
  Eigen::VectorXd phi;
  Eigen::MatrixXd grads;
  Matrix3X vals, curls;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    space.evaluate(e, rule.reference_point(q), phi, grads);
    vector_values(phi, vals);
    vector_curls(grads, curls);
    b.noalias() += rule.weights[q] * det * mu * vals.transpose() * curls;
  }
  return b;
}

inline void check_penalty(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("penalty parameter alpha must be positive");
}

}  // namespace detail

/// Symmetric interior penalty system
///   (kappa u, v) + (mu curl u, curl v) + <{{mu curl v}}, [[u]]>
///   + <{{mu curl u}}, [[v]]> + alpha h_f^{-1} <[[u]], [[v]]> = (f, v)
/// over all elements and all faces, boundary faces one-sided. With
/// [[v]] = v1 x n1 + v2 x n2, integration by parts gives
/// (curl w, v)_tau = (w, curl v)_tau + <w, v x n>_dtau, hence the plus
/// signs on the consistency terms.
inline SparseSystem assemble_ipdg(const DGVectorSpace& space, const ManufacturedProblem& problem,
                                  double alpha = kDefaultPenalty) {
  detail::check_penalty(alpha);
  const TetMesh& mesh = space.mesh();
  const ElementCoefficients coeff = sample_coefficients(space, problem.coefficients);
  const int n = space.num_dofs();
  const int dpe = space.dofs_per_element();

  SparseSystem sys;
  sys.kind = SystemKind::primal;
  sys.rhs = Eigen::VectorXd::Zero(n);

  auto triplets = detail::collect_triplets(mesh.num_tets(), [&](auto& out, int e) {
    Eigen::MatrixXd local = detail::element_curl_curl(space, coeff.mu[e], e);
    local.diagonal().array() += coeff.kappa[e] * space.geometry(e).det;
    detail::add_block(out, space.offset(e), space.offset(e), local);
    sys.rhs.segment(space.offset(e), dpe) = detail::element_load(space, problem, e);
  });

  const int face_order = 2 * space.degree();
  auto face_triplets = detail::collect_triplets(mesh.num_faces(), [&](auto& out, int f) {
    const FaceQuadrature fq = face_quadrature(space, f, face_order);
    const double penalty = alpha / mesh.face(f).diameter;
    const int m = fq.sides() * dpe;
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(m, m);
    detail::for_each_face_point(space, coeff, fq, [&](const detail::FacePointBasis& pb) {
      const Eigen::MatrixXd cj = pb.avg_curl.transpose() * pb.jump;
      local.noalias() += pb.weight * (penalty * pb.jump.transpose() * pb.jump + cj + cj.transpose());
    });
    detail::add_face_block(out, space, fq, 0, 0, local);
  });
  triplets.insert(triplets.end(), face_triplets.begin(), face_triplets.end());

  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

/// Mixed system on the unknown (p, u):
///   (p, q) - (mu curl u, q) - <{{mu q}}, [[u]]>                       = 0
///   (curl v, p) + (kappa u, v) + <{{mu curl u}} + alpha h_f^{-1}[[u]], [[v]]> = (f, v)
/// Eliminating p reproduces the primal system.
inline SparseSystem assemble_mixed(const DGVectorSpace& space, const ManufacturedProblem& problem,
                                   double alpha = kDefaultPenalty) {
  detail::check_penalty(alpha);
  const TetMesh& mesh = space.mesh();
  const ElementCoefficients coeff = sample_coefficients(space, problem.coefficients);
  const int n = space.num_dofs();
  const int dpe = space.dofs_per_element();

  SparseSystem sys;
  sys.kind = SystemKind::mixed;
  sys.rhs = Eigen::VectorXd::Zero(2 * n);

  auto triplets = detail::collect_triplets(mesh.num_tets(), [&](auto& out, int e) {
    const double det = space.geometry(e).det;
    const Eigen::MatrixXd mass = Eigen::MatrixXd::Identity(dpe, dpe) * det;
    const Eigen::MatrixXd b = detail::element_curl_coupling(space, coeff.mu[e], e);
    detail::add_block(out, space.offset(e), space.offset(e), mass);
    detail::add_block(out, space.offset(e), n + space.offset(e), -b);
    // (curl v, p) = b^T / mu
    detail::add_block(out, n + space.offset(e), space.offset(e), b.transpose() / coeff.mu[e]);
    detail::add_block(out, n + space.offset(e), n + space.offset(e), coeff.kappa[e] * mass);
    sys.rhs.segment(n + space.offset(e), dpe) = detail::element_load(space, problem, e);
  });

  const int face_order = 2 * space.degree();
  auto face_triplets = detail::collect_triplets(mesh.num_faces(), [&](auto& out, int f) {
    const FaceQuadrature fq = face_quadrature(space, f, face_order);
    const double penalty = alpha / mesh.face(f).diameter;
    const int m = fq.sides() * dpe;
    Eigen::MatrixXd qu = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd vu = Eigen::MatrixXd::Zero(m, m);
    detail::for_each_face_point(space, coeff, fq, [&](const detail::FacePointBasis& pb) {
      qu.noalias() -= pb.weight * pb.avg_value.transpose() * pb.jump;
      vu.noalias() += pb.weight * (penalty * pb.jump.transpose() * pb.jump +
                                   pb.jump.transpose() * pb.avg_curl);
    });
    detail::add_face_block(out, space, fq, 0, n, qu);
    detail::add_face_block(out, space, fq, n, n, vu);
  });
  triplets.insert(triplets.end(), face_triplets.begin(), face_triplets.end());

  sys.matrix.resize(2 * n, 2 * n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

/// Splits a mixed solution vector (p, u) into fields.
inline DiscreteSolution split_mixed(const std::shared_ptr<const DGVectorSpace>& space,
                                    const Eigen::VectorXd& x) {
  const int n = space->num_dofs();
  if (x.size() != 2 * n) throw std::invalid_argument("split_mixed: vector length mismatch");
  return {FieldFunction(space, x.tail(n)), FieldFunction(space, x.head(n))};
}

/// p_h with (p_h, q) = (mu curl u_h, q) + <{{mu q}}, [[u_h]]> for all q,
/// solved element by element.
inline FieldFunction recover_p(const FieldFunction& u, const Coefficients& coefficients) {
  const DGVectorSpace& space = u.space();
  const TetMesh& mesh = space.mesh();
  const ElementCoefficients coeff = sample_coefficients(space, coefficients);
  const int dpe = space.dofs_per_element();
  FieldFunction p(u.space_ptr());
  const TetRule& rule = tet_rule(2 * space.degree());
  const int face_order = 2 * space.degree();

  parallel_chunks(mesh.num_tets(), [&](int, int begin, int end) {
    Eigen::VectorXd phi;
    Eigen::MatrixXd grads;
    detail::Matrix3X vals;
    for (int e = begin; e < end; ++e) {
      const double det = space.geometry(e).det;
      if (!(det > 0.0)) throw GeometryError("recover_p: singular element mass block");
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dpe);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Eigen::Vector3d xi = rule.reference_point(q);
        space.evaluate(e, xi, phi, grads);
        detail::vector_values(phi, vals);
        rhs.noalias() += rule.weights[q] * det * coeff.mu[e] * vals.transpose() *
                         detail::local_curl(u.local(e), grads);
      }
      for (int f : mesh.tet_faces(e)) {
        const FaceQuadrature fq = face_quadrature(space, f, face_order);
        const int side = fq.elements[0] == e ? 0 : 1;
        const double omega = fq.boundary ? 1.0 : 0.5;
        for (std::size_t q = 0; q < fq.points.size(); ++q) {
          Eigen::Vector3d jmp = Eigen::Vector3d::Zero();
          for (int s = 0; s < fq.sides(); ++s) {
            space.basis().evaluate(fq.reference[s][q], phi);
            jmp += detail::local_value(u.local(fq.elements[s]), phi).cross(fq.side_normal(s));
          }
          space.basis().evaluate(fq.reference[side][q], phi);
          detail::vector_values(phi, vals);
          rhs.noalias() += fq.weights[q] * omega * coeff.mu[e] * vals.transpose() * jmp;
        }
      }
      p.coefficients().segment(space.offset(e), dpe) = rhs / det;
    }
  });
  return p;
}

}  // namespace amipdg
