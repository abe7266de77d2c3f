#pragma once

// Discontinuous vector-valued polynomial spaces (P_l)^3 on tetrahedral
// meshes: orthonormal modal basis, element maps, face traces and the
// tangential jump / average operators.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesh.hpp"
#include "quadrature.hpp"

namespace amipdg {

/// Scalar P_l basis orthonormal in L^2 of the reference tetrahedron,
/// obtained by Gram-Schmidt (Cholesky) on the monomials.
class ScalarBasis {
 public:
  explicit ScalarBasis(int degree) : degree_(degree) {
    if (degree < 0) throw std::invalid_argument("ScalarBasis: negative degree");
    for (int d = 0; d <= degree; ++d)
      for (int a = d; a >= 0; --a)
        for (int b = d - a; b >= 0; --b) exponents_.push_back({a, b, d - a - b});
    const int n = size();
    const TetRule& rule = tet_rule(2 * degree);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd m(n);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      monomials(rule.reference_point(q), m);
      gram.noalias() += rule.weights[q] * m * m.transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw std::runtime_error("ScalarBasis: Gram matrix not SPD");
    Eigen::MatrixXd lower = llt.matrixL();
    coeffs_ = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }

  void evaluate(const Eigen::Vector3d& xi, Eigen::VectorXd& values) const {
    Eigen::VectorXd m(size());
    monomials(xi, m);
    values.noalias() = coeffs_ * m;
  }

  /// Rows are reference gradients of the basis functions.
  void evaluate_gradients(const Eigen::Vector3d& xi, Eigen::MatrixXd& grads) const {
    const int n = size();
    Eigen::MatrixXd dm(n, 3);
    for (int j = 0; j < n; ++j) {
      const auto& e = exponents_[j];
      for (int d = 0; d < 3; ++d) {
        if (e[d] == 0) {
          dm(j, d) = 0.0;
          continue;
        }
        double v = kScale * e[d];
        for (int k = 0; k < 3; ++k) v *= ipow(shifted(xi[k]), k == d ? e[k] - 1 : e[k]);
        dm(j, d) = v;
      }
    }
    grads.noalias() = coeffs_ * dm;
  }

 private:
  // Monomials are centred on the reference centroid; raw monomials lose
  // about three digits to cancellation at degree 3.
  static constexpr double kScale = 4.0;
  static double shifted(double x) { return kScale * (x - 0.25); }

  static double ipow(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
  }

  void monomials(const Eigen::Vector3d& xi, Eigen::VectorXd& m) const {
    for (int j = 0; j < size(); ++j) {
      const auto& e = exponents_[j];
      m[j] = ipow(shifted(xi[0]), e[0]) * ipow(shifted(xi[1]), e[1]) * ipow(shifted(xi[2]), e[2]);
    }
  }

  int degree_;
  std::vector<std::array<int, 3>> exponents_;
  Eigen::MatrixXd coeffs_;
};

/// Affine map x = origin + jacobian * xi from the reference tetrahedron.
struct ElementGeometry {
  Point origin;
  Eigen::Matrix3d jacobian;
  Eigen::Matrix3d inverse;
  double det = 0.0;  // positive: cells are oriented on construction
};

class DGVectorSpace {
 public:
  DGVectorSpace(std::shared_ptr<const TetMesh> mesh, int degree = 1)
      : mesh_(std::move(mesh)), basis_(degree) {
    if (!mesh_) throw std::invalid_argument("DGVectorSpace: null mesh");
    if (degree < 1) throw std::invalid_argument("DGVectorSpace: degree must be >= 1");
    geometry_.reserve(mesh_->num_tets());
    for (int t = 0; t < mesh_->num_tets(); ++t) {
      const auto& tv = mesh_->tet(t).vertices;
      ElementGeometry g;
      g.origin = mesh_->vertex(tv[0]);
      for (int d = 0; d < 3; ++d) g.jacobian.col(d) = mesh_->vertex(tv[d + 1]) - g.origin;
      g.det = g.jacobian.determinant();
      if (!(g.det > 0.0)) throw GeometryError("DGVectorSpace: degenerate element " + std::to_string(t));
      g.inverse = g.jacobian.inverse();
      geometry_.push_back(g);
    }
  }

  const TetMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TetMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return basis_.degree(); }
  const ScalarBasis& basis() const { return basis_; }
  int scalar_size() const { return basis_.size(); }
  int dofs_per_element() const { return 3 * basis_.size(); }
  int num_elements() const { return mesh_->num_tets(); }
  int num_dofs() const { return num_elements() * dofs_per_element(); }
  int offset(int e) const { return e * dofs_per_element(); }

  const ElementGeometry& geometry(int e) const {
    if (e < 0 || e >= num_elements()) throw std::out_of_range("element index out of range");
    return geometry_[e];
  }

  Point to_physical(int e, const Eigen::Vector3d& xi) const {
    const auto& g = geometry(e);
    return g.origin + g.jacobian * xi;
  }

  Eigen::Vector3d to_reference(int e, const Point& x) const {
    const auto& g = geometry(e);
    return g.inverse * (x - g.origin);
  }

  /// Scalar basis values and physical gradients (rows) at a reference point.
  void evaluate(int e, const Eigen::Vector3d& xi, Eigen::VectorXd& values,
                Eigen::MatrixXd& grads) const {
    basis_.evaluate(xi, values);
    Eigen::MatrixXd ref(scalar_size(), 3);
    basis_.evaluate_gradients(xi, ref);
    grads.noalias() = ref * geometry(e).inverse;
  }

 private:
  std::shared_ptr<const TetMesh> mesh_;
  ScalarBasis basis_;
  std::vector<ElementGeometry> geometry_;
};

/// Local vector basis function k = c * nb + i is phi_i e_c; its curl is
/// grad(phi_i) x e_c.
inline Eigen::Vector3d basis_curl(const Eigen::MatrixXd& grads, int i, int c) {
  const Eigen::Vector3d g = grads.row(i).transpose();
  return g.cross(Eigen::Vector3d::Unit(c));
}

class FieldFunction {
 public:
  FieldFunction() = default;
  explicit FieldFunction(std::shared_ptr<const DGVectorSpace> space)
      : space_(std::move(space)), coefficients_(Eigen::VectorXd::Zero(space_->num_dofs())) {}
  FieldFunction(std::shared_ptr<const DGVectorSpace> space, Eigen::VectorXd coefficients)
      : space_(std::move(space)), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != space_->num_dofs())
      throw std::invalid_argument("FieldFunction: coefficient length does not match space");
  }

  const DGVectorSpace& space() const { return *space_; }
  const std::shared_ptr<const DGVectorSpace>& space_ptr() const { return space_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  Eigen::VectorXd& coefficients() { return coefficients_; }

  auto local(int e) const {
    return coefficients_.segment(space_->offset(e), space_->dofs_per_element());
  }

 private:
  std::shared_ptr<const DGVectorSpace> space_;
  Eigen::VectorXd coefficients_;
};

/// Discrete pair (u_h, p_h) on a common space.
struct DiscreteSolution {
  FieldFunction u;
  FieldFunction p;
};

namespace detail {

inline void check_element(const FieldFunction& field, int e) {
  if (e < 0 || e >= field.space().num_elements())
    throw std::out_of_range("element index out of range");
}

/// Value, curl and divergence from local coefficients and basis data.
inline Eigen::Vector3d local_value(const Eigen::Ref<const Eigen::VectorXd>& c,
                                   const Eigen::VectorXd& phi) {
  const int nb = static_cast<int>(phi.size());
  Eigen::Vector3d v;
  for (int d = 0; d < 3; ++d) v[d] = c.segment(d * nb, nb).dot(phi);
  return v;
}

inline Eigen::Vector3d local_curl(const Eigen::Ref<const Eigen::VectorXd>& c,
                                  const Eigen::MatrixXd& grads) {
  const int nb = static_cast<int>(grads.rows());
  // gradient tensor G(d, k) = d v_d / d x_k
  Eigen::Matrix3d g;
  for (int d = 0; d < 3; ++d) g.row(d) = c.segment(d * nb, nb).transpose() * grads;
  return {g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1)};
}

inline double local_divergence(const Eigen::Ref<const Eigen::VectorXd>& c,
                               const Eigen::MatrixXd& grads) {
  const int nb = static_cast<int>(grads.rows());
  double div = 0.0;
  for (int d = 0; d < 3; ++d) div += c.segment(d * nb, nb).dot(grads.col(d));
  return div;
}

}  // namespace detail

inline Eigen::Vector3d eval(const FieldFunction& field, int e, const Eigen::Vector3d& xi) {
  detail::check_element(field, e);
  Eigen::VectorXd phi;
  field.space().basis().evaluate(xi, phi);
  return detail::local_value(field.local(e), phi);
}

/// Element-local curl (no distributional face contributions).
inline Eigen::Vector3d curl_eval(const FieldFunction& field, int e, const Eigen::Vector3d& xi) {
  detail::check_element(field, e);
  Eigen::VectorXd phi;
  Eigen::MatrixXd grads;
  field.space().evaluate(e, xi, phi, grads);
  return detail::local_curl(field.local(e), grads);
}

inline double divergence_eval(const FieldFunction& field, int e, const Eigen::Vector3d& xi) {
  detail::check_element(field, e);
  Eigen::VectorXd phi;
  Eigen::MatrixXd grads;
  field.space().evaluate(e, xi, phi, grads);
  return detail::local_divergence(field.local(e), grads);
}

/// Elementwise L^2 projection of a vector function. The physical mass
/// matrix of the orthonormal basis is det(J) I, so the determinant cancels.
template <class Fn>
FieldFunction project(std::shared_ptr<const DGVectorSpace> space, Fn&& fn, int order = 6) {
  FieldFunction out(space);
  const TetRule& rule = tet_rule(std::max(order, 2 * space->degree()));
  const int nb = space->scalar_size();
  Eigen::VectorXd phi;
  for (int e = 0; e < space->num_elements(); ++e) {
    auto local = out.coefficients().segment(space->offset(e), space->dofs_per_element());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d xi = rule.reference_point(q);
      space->basis().evaluate(xi, phi);
      const Eigen::Vector3d v = fn(space->to_physical(e, xi));
      for (int c = 0; c < 3; ++c) local.segment(c * nb, nb) += rule.weights[q] * v[c] * phi;
    }
  }
  return out;
}

/// Quadrature on one mesh face, with the reference coordinates of each
/// point in every incident element.
struct FaceQuadrature {
  int face = -1;
  bool boundary = true;
  std::array<int, 2> elements{-1, -1};
  Point normal;  // unit, outward from elements[0]
  std::vector<Point> points;
  std::vector<double> weights;  // include the surface measure
  std::array<std::vector<Eigen::Vector3d>, 2> reference;

  int sides() const { return boundary ? 1 : 2; }
  /// Outward normal of side s.
  Point side_normal(int s) const { return s == 0 ? normal : Point(-normal); }
};

inline FaceQuadrature face_quadrature(const DGVectorSpace& space, int f, int order) {
  const TetMesh& mesh = space.mesh();
  const Face& face = mesh.face(f);
  FaceQuadrature fq;
  fq.face = f;
  fq.boundary = face.boundary;
  fq.elements = face.incident;
  fq.normal = face.normal;
  const TriangleRule& rule = triangle_rule(order);
  const Point& a = mesh.vertex(face.vertices[0]);
  const Point& b = mesh.vertex(face.vertices[1]);
  const Point& c = mesh.vertex(face.vertices[2]);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& bc = rule.points[q];
    const Point x = bc[0] * a + bc[1] * b + bc[2] * c;
    fq.points.push_back(x);
    fq.weights.push_back(rule.weights[q] * 2.0 * face.area);
    for (int s = 0; s < fq.sides(); ++s) fq.reference[s].push_back(space.to_reference(fq.elements[s], x));
  }
  return fq;
}

/// Tangential jump [[v]] at the face quadrature points:
/// v_1 x n_1 + v_2 x n_2 inside, v x n on the boundary.
inline std::vector<Eigen::Vector3d> jump(const FieldFunction& field, int f, int order = 2) {
  const FaceQuadrature fq = face_quadrature(field.space(), f, order);
  std::vector<Eigen::Vector3d> out(fq.points.size(), Eigen::Vector3d::Zero());
  for (int s = 0; s < fq.sides(); ++s) {
    const Point n = fq.side_normal(s);
    for (std::size_t q = 0; q < out.size(); ++q)
      out[q] += eval(field, fq.elements[s], fq.reference[s][q]).cross(n);
  }
  return out;
}

/// Average {{v}} at the face quadrature points; one-sided on the boundary.
inline std::vector<Eigen::Vector3d> average(const FieldFunction& field, int f, int order = 2) {
  const FaceQuadrature fq = face_quadrature(field.space(), f, order);
  std::vector<Eigen::Vector3d> out(fq.points.size(), Eigen::Vector3d::Zero());
  const double w = fq.boundary ? 1.0 : 0.5;
  for (int s = 0; s < fq.sides(); ++s)
    for (std::size_t q = 0; q < out.size(); ++q)
      out[q] += w * eval(field, fq.elements[s], fq.reference[s][q]);
  return out;
}

/// Transfers a field to a refined mesh. Children inherit the ancestor's
/// polynomial, so the transfer is exact.
inline FieldFunction prolongate(const FieldFunction& coarse, const Refinement& refinement,
                                std::shared_ptr<const DGVectorSpace> fine_space) {
  if (static_cast<int>(refinement.ancestor.size()) != fine_space->num_elements())
    throw std::invalid_argument("prolongate: refinement does not match the fine space");
  if (fine_space->degree() != coarse.space().degree())
    throw std::invalid_argument("prolongate: degree mismatch");
  FieldFunction fine(fine_space);
  const DGVectorSpace& cs = coarse.space();
  const int nb = fine_space->scalar_size();
  const TetRule& rule = tet_rule(2 * fine_space->degree());
  Eigen::VectorXd phi;
  for (int e = 0; e < fine_space->num_elements(); ++e) {
    const int parent = refinement.ancestor[e];
    auto local = fine.coefficients().segment(fine_space->offset(e), fine_space->dofs_per_element());
    if (fine_space->geometry(e).origin == cs.geometry(parent).origin &&
        fine_space->geometry(e).jacobian == cs.geometry(parent).jacobian) {
      local = coarse.local(parent);
      continue;
    }
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d xi = rule.reference_point(q);
      fine_space->basis().evaluate(xi, phi);
      const Eigen::Vector3d v = eval(coarse, parent, cs.to_reference(parent, fine_space->to_physical(e, xi)));
      for (int c = 0; c < 3; ++c) local.segment(c * nb, nb) += rule.weights[q] * v[c] * phi;
    }
  }
  return fine;
}

}  // namespace amipdg
