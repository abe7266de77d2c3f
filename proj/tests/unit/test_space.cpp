#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <amipdg/quadrature.hpp>
#include <amipdg/space.hpp>

using namespace amipdg;

namespace {

std::shared_ptr<const DGVectorSpace> cube_space(int M, int degree = 1) {
  return std::make_shared<const DGVectorSpace>(std::make_shared<const TetMesh>(build_unit_cube_mesh(M)), degree);
}

// Exact integral of x^a y^b z^c over the reference tetrahedron.
double tet_monomial(int a, int b, int c) {
  return std::tgamma(a + 1) * std::tgamma(b + 1) * std::tgamma(c + 1) / std::tgamma(a + b + c + 4);
}

double tri_monomial(int a, int b) { return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3); }

Eigen::Vector3d linear_field(const Point& x) {
  return {1.0 + 2.0 * x.x() - x.z(), 0.5 * x.y() + 3.0 * x.z(), -x.x() + x.y() + 0.25};
}

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  const auto [x, w] = gauss_legendre(4);
  for (int p = 0; p <= 7; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], p);
    EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << p;
  }
}

TEST(Quadrature, TetRuleIsExactUpToItsOrder) {
  for (int order : {1, 2, 4, 6}) {
    const TetRule& rule = tet_rule(order);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b)
        for (int c = 0; a + b + c <= order; ++c) {
          double s = 0.0;
          for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto xi = rule.reference_point(q);
            s += rule.weights[q] * std::pow(xi[0], a) * std::pow(xi[1], b) * std::pow(xi[2], c);
          }
          EXPECT_NEAR(s, tet_monomial(a, b, c), 1e-14) << order << ": " << a << b << c;
        }
  }
}

TEST(Quadrature, TriangleRuleIsExactUpToItsOrder) {
  for (int order : {1, 2, 5, 6}) {
    const TriangleRule& rule = triangle_rule(order);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const auto xi = rule.reference_point(q);
          s += rule.weights[q] * std::pow(xi[0], a) * std::pow(xi[1], b);
        }
        EXPECT_NEAR(s, tri_monomial(a, b), 1e-14);
      }
  }
}

TEST(Basis, IsOrthonormalOnReferenceTet) {
  for (int degree : {1, 2, 3}) {
    const ScalarBasis basis(degree);
    EXPECT_EQ(basis.size(), (degree + 1) * (degree + 2) * (degree + 3) / 6);
    const TetRule& rule = tet_rule(2 * degree);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    Eigen::VectorXd phi;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      basis.evaluate(rule.reference_point(q), phi);
      gram += rule.weights[q] * phi * phi.transpose();
    }
    EXPECT_TRUE(gram.isIdentity(1e-12)) << gram;
  }
}

TEST(Basis, GradientsMatchFiniteDifferences) {
  const ScalarBasis basis(2);
  const Eigen::Vector3d xi(0.2, 0.3, 0.1);
  Eigen::MatrixXd grads;
  basis.evaluate_gradients(xi, grads);
  Eigen::VectorXd fp, fm;
  const double h = 1e-6;
  for (int d = 0; d < 3; ++d) {
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(d) * h;
    basis.evaluate(xi + e, fp);
    basis.evaluate(xi - e, fm);
    EXPECT_TRUE(grads.col(d).isApprox((fp - fm) / (2 * h), 1e-7));
  }
}

// The modal basis is not nodal, so partition of unity is checked on the
// barycentric hat functions represented in it.
TEST(Basis, ProjectedBarycentricFunctionsSumToOne) {
  const ScalarBasis basis(1);
  const TetRule& rule = tet_rule(2);
  Eigen::VectorXd phi;
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(basis.size(), 4);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate(rule.reference_point(q), phi);
    for (int k = 0; k < 4; ++k) coeffs.col(k) += rule.weights[q] * rule.points[q][k] * phi;
  }
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d xi(u(rng), u(rng), u(rng));
    if (xi.sum() > 1.0) xi /= 1.5 * xi.sum();
    basis.evaluate(xi, phi);
    EXPECT_NEAR((coeffs.transpose() * phi).sum(), 1.0, 1e-13);
    const double l0 = 1.0 - xi.sum();
    EXPECT_NEAR(coeffs.col(0).dot(phi), l0, 1e-13);
  }
}

TEST(Space, DofLayoutAndGeometry) {
  auto space = cube_space(1, 1);
  EXPECT_EQ(space->dofs_per_element(), 12);
  EXPECT_EQ(space->num_dofs(), 72);
  EXPECT_EQ(space->offset(2), 24);
  for (int e = 0; e < space->num_elements(); ++e) {
    EXPECT_NEAR(space->geometry(e).det, 6.0 * space->mesh().volume(e), 1e-14);
    const Eigen::Vector3d xi(0.1, 0.2, 0.3);
    EXPECT_TRUE(space->to_reference(e, space->to_physical(e, xi)).isApprox(xi, 1e-13));
  }
  EXPECT_THROW(space->geometry(6), std::out_of_range);
  EXPECT_THROW(DGVectorSpace(nullptr), std::invalid_argument);
}

TEST(Space, ProjectionReproducesLinearFieldsWithCurlAndDivergence) {
  auto space = cube_space(2);
  const FieldFunction v = project(space, linear_field);
  // curl and divergence of linear_field by hand
  const Eigen::Vector3d curl(1.0 - 3.0, -1.0 - (-1.0), 0.0 - 0.0);
  const double div = 2.0 + 0.5 + 0.0;
  for (int e = 0; e < space->num_elements(); e += 7) {
    const Eigen::Vector3d xi(0.25, 0.25, 0.25);
    EXPECT_TRUE(eval(v, e, xi).isApprox(linear_field(space->to_physical(e, xi)), 1e-12));
    EXPECT_TRUE(curl_eval(v, e, xi).isApprox(curl, 1e-12));
    EXPECT_NEAR(divergence_eval(v, e, xi), div, 1e-12);
  }
}

TEST(Space, CurlMatchesFiniteDifferencesOfDiscreteField) {
  auto space = cube_space(1, 2);
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(space->num_dofs(), -1.0, 2.0).array().sin();
  const FieldFunction v(space, c);
  const int e = 3;
  const Eigen::Vector3d xi(0.2, 0.25, 0.3);
  const Point x = space->to_physical(e, xi);
  const double h = 1e-6;
  Eigen::Matrix3d jac;
  for (int d = 0; d < 3; ++d) {
    const Point dx = Point::Unit(d) * h;
    jac.col(d) = (eval(v, e, space->to_reference(e, x + dx)) - eval(v, e, space->to_reference(e, x - dx))) / (2 * h);
  }
  const Eigen::Vector3d fd(jac(2, 1) - jac(1, 2), jac(0, 2) - jac(2, 0), jac(1, 0) - jac(0, 1));
  EXPECT_TRUE(curl_eval(v, e, xi).isApprox(fd, 1e-7));
}

TEST(Space, FieldRejectsWrongLength) {
  auto space = cube_space(1);
  EXPECT_THROW(FieldFunction(space, Eigen::VectorXd::Zero(5)), std::invalid_argument);
  EXPECT_THROW(eval(FieldFunction(space), 99, Eigen::Vector3d::Zero()), std::out_of_range);
}

TEST(Traces, JumpOfContinuousFieldVanishesOnInteriorFaces) {
  auto space = cube_space(2);
  const FieldFunction v = project(space, linear_field);
  for (int f = 0; f < space->mesh().num_faces(); ++f) {
    if (space->mesh().face(f).boundary) continue;
    for (const auto& j : jump(v, f)) EXPECT_LT(j.norm(), 1e-12);
    const auto avg = average(v, f);
    const FaceQuadrature fq = face_quadrature(*space, f, 2);
    for (std::size_t q = 0; q < avg.size(); ++q) EXPECT_TRUE(avg[q].isApprox(linear_field(fq.points[q]), 1e-12));
  }
}

TEST(Traces, JumpEqualsDifferenceTimesFirstNormal) {
  auto space = cube_space(2);
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(space->num_dofs(), 0.0, 5.0).array().cos();
  const FieldFunction v(space, c);
  for (int f = 0; f < space->mesh().num_faces(); ++f) {
    const FaceQuadrature fq = face_quadrature(*space, f, 2);
    const auto j = jump(v, f);
    for (std::size_t q = 0; q < j.size(); ++q) {
      const Eigen::Vector3d v1 = eval(v, fq.elements[0], fq.reference[0][q]);
      const Eigen::Vector3d v2 = fq.boundary ? Eigen::Vector3d::Zero() : eval(v, fq.elements[1], fq.reference[1][q]);
      EXPECT_TRUE(j[q].isApprox((v1 - v2).cross(fq.normal), 1e-12));
    }
  }
}

TEST(Traces, NormalFieldHasZeroJumpAndBoundaryTraceIsOneSided) {
  auto space = cube_space(1);
  const TetMesh& mesh = space->mesh();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Point n = mesh.face(f).normal;
    const FieldFunction v = project(space, [&](const Point&) { return Eigen::Vector3d(n); });
    for (const auto& j : jump(v, f)) EXPECT_LT(j.norm(), 1e-12);
    if (mesh.face(f).boundary)
      for (const auto& a : average(v, f)) EXPECT_TRUE(a.isApprox(n, 1e-12));
  }
}

TEST(Traces, FaceQuadratureIntegratesArea) {
  auto space = cube_space(2);
  for (int f = 0; f < space->mesh().num_faces(); ++f) {
    const FaceQuadrature fq = face_quadrature(*space, f, 3);
    double area = 0.0;
    for (double w : fq.weights) area += w;
    EXPECT_NEAR(area, space->mesh().face(f).area, 1e-15);
    for (int s = 0; s < fq.sides(); ++s)
      for (std::size_t q = 0; q < fq.points.size(); ++q)
        EXPECT_TRUE(space->to_physical(fq.elements[s], fq.reference[s][q]).isApprox(fq.points[q], 1e-14));
  }
}

TEST(Prolongation, IsExactForPiecewisePolynomials) {
  auto coarse = cube_space(1);
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(coarse->num_dofs(), -2.0, 3.0).array().sin();
  const FieldFunction v(coarse, c);
  const Refinement ref = bisect(coarse->mesh(), std::vector<int>{0, 4});
  auto fine = std::make_shared<const DGVectorSpace>(std::make_shared<const TetMesh>(ref.mesh), 1);
  const FieldFunction w = prolongate(v, ref, fine);
  for (int t = 0; t < fine->num_elements(); ++t) {
    const Point x = fine->mesh().centroid(t);
    const int a = ref.ancestor[t];
    EXPECT_TRUE(eval(w, t, fine->to_reference(t, x)).isApprox(eval(v, a, coarse->to_reference(a, x)), 1e-12));
  }
}
