#include <gtest/gtest.h>

#include <random>

#include <amipdg/assembly.hpp>
#include <amipdg/solve.hpp>

using namespace amipdg;

namespace {

std::shared_ptr<const DGVectorSpace> cube_space(int M, int degree = 1) {
  return std::make_shared<const DGVectorSpace>(std::make_shared<const TetMesh>(build_unit_cube_mesh(M)), degree);
}

// Smooth field with u x n = 0 on the cube boundary, polynomial of degree 4.
Eigen::Vector3d bubble(const Point& x) {
  auto b = [](double t) { return t * (1.0 - t); };
  return {b(x.y()) * b(x.z()), b(x.x()) * b(x.z()), b(x.x()) * b(x.y())};
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

double quadratic_form(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& x) { return x.dot(a * x); }

}  // namespace

TEST(Assembly, PrimalMatrixIsSymmetric) {
  auto space = cube_space(2);
  const SparseSystem sys = assemble_ipdg(*space, example1(), 100.0);
  const Eigen::SparseMatrix<double> diff = sys.matrix - Eigen::SparseMatrix<double>(sys.matrix.transpose());
  EXPECT_LE(diff.norm(), 1e-12 * sys.matrix.norm());
  EXPECT_EQ(sys.kind, SystemKind::primal);
}

TEST(Assembly, SingleTetIsPositiveDefiniteWithDefaultPenalty) {
  auto space = std::make_shared<const DGVectorSpace>(
      std::make_shared<const TetMesh>(
          TetMesh({Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0), Point(0, 0, 1)}, {{0, 1, 2, 3}})),
      1);
  const SparseSystem sys = assemble_ipdg(*space, example1(), kDefaultPenalty);
  ASSERT_EQ(sys.matrix.rows(), 12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(sys.matrix)};
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(Assembly, JumpFreeFieldSeesOnlyVolumeEnergy) {
  auto space = cube_space(1, 4);
  const FieldFunction u = project(space, bubble, 8);
  const SparseSystem sys = assemble_ipdg(*space, example1(), 100.0);
  double expected = 0.0;
  const TetRule& rule = tet_rule(8);
  for (int e = 0; e < space->num_elements(); ++e)
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::Vector3d xi = rule.reference_point(q);
      const double w = rule.weights[q] * space->geometry(e).det;
      expected += w * (eval(u, e, xi).squaredNorm() + curl_eval(u, e, xi).squaredNorm());
    }
  EXPECT_NEAR(quadratic_form(sys.matrix, u.coefficients()), expected, 1e-10);
}

TEST(Assembly, QuadraticFormGrowsWithPenaltyWhenJumpsArePresent) {
  auto space = cube_space(1);
  const Eigen::VectorXd x = random_vector(space->num_dofs(), 5);
  double prev = -1e300;
  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    const double q = quadratic_form(assemble_ipdg(*space, example1(), alpha).matrix, x);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(Assembly, ZeroSourceGivesZeroLoad) {
  ManufacturedProblem p = example1();
  p.rhs_f = [](const Point&) { return Eigen::Vector3d::Zero().eval(); };
  auto space = cube_space(2);
  EXPECT_EQ(assemble_ipdg(*space, p).rhs.norm(), 0.0);
  EXPECT_EQ(assemble_mixed(*space, p).rhs.norm(), 0.0);
}

TEST(Assembly, LoadVectorIsProjectionOfSource) {
  ManufacturedProblem p = example1();
  p.rhs_f = [](const Point& x) { return Eigen::Vector3d(1.0 + x.x(), 2.0 * x.y(), -x.z()); };
  auto space = cube_space(2);
  const SparseSystem sys = assemble_ipdg(*space, p);
  const FieldFunction proj = project(space, p.rhs_f);
  for (int e = 0; e < space->num_elements(); ++e)
    EXPECT_TRUE(sys.rhs.segment(space->offset(e), space->dofs_per_element())
                    .isApprox(space->geometry(e).det * proj.local(e), 1e-12));
}

TEST(Assembly, RejectsNonPositivePenalty) {
  auto space = cube_space(1);
  EXPECT_THROW(assemble_ipdg(*space, example1(), 0.0), std::invalid_argument);
  EXPECT_THROW(assemble_mixed(*space, example1(), -1.0), std::invalid_argument);
}

TEST(Assembly, NonPositiveCoefficientsAreRejected) {
  ManufacturedProblem p = example1();
  p.coefficients.mu = [](const Point&) { return 0.0; };
  EXPECT_THROW(assemble_ipdg(*cube_space(1), p), std::invalid_argument);
}

TEST(Mixed, EliminatingPReproducesPrimalSolution) {
  auto space = cube_space(1);
  const ManufacturedProblem p = example1();
  const auto [x_primal, r1] = solve_linear(assemble_ipdg(*space, p));
  const auto [x_mixed, r2] = solve_linear(assemble_mixed(*space, p));
  const DiscreteSolution mixed = split_mixed(space, x_mixed);
  EXPECT_LE((mixed.u.coefficients() - x_primal).norm(), 1e-9 * x_primal.norm());
  const FieldFunction p_rec = recover_p(FieldFunction(space, x_primal), p.coefficients);
  EXPECT_LE((p_rec.coefficients() - mixed.p.coefficients()).norm(), 1e-9 * mixed.p.coefficients().norm());
}

TEST(RecoverP, SatisfiesFirstMixedEquationForArbitraryU) {
  auto space = cube_space(2);
  const ManufacturedProblem p = example1();
  const SparseSystem mixed = assemble_mixed(*space, p);
  const int n = space->num_dofs();
  const FieldFunction u(space, random_vector(n, 9));
  const FieldFunction ph = recover_p(u, p.coefficients);
  Eigen::VectorXd x(2 * n);
  x << ph.coefficients(), u.coefficients();
  const Eigen::VectorXd residual = (mixed.matrix * x).head(n);
  EXPECT_LE(residual.norm(), 1e-11 * u.coefficients().norm());
}

TEST(RecoverP, JumpFreeFieldGivesItsCurl) {
  auto space = cube_space(1, 4);
  const FieldFunction u = project(space, bubble, 8);
  const FieldFunction ph = recover_p(u, Coefficients{});
  for (int e = 0; e < space->num_elements(); ++e) {
    const Eigen::Vector3d xi(0.2, 0.3, 0.1);
    EXPECT_TRUE(eval(ph, e, xi).isApprox(curl_eval(u, e, xi), 1e-10));
  }
}

TEST(RecoverP, ConstantFieldGivesZeroAwayFromBoundary) {
  auto space = cube_space(2);
  const FieldFunction u = project(space, [](const Point&) { return Eigen::Vector3d(1.0, -2.0, 0.5); });
  const FieldFunction ph = recover_p(u, Coefficients{});
  const TetMesh& mesh = space->mesh();
  int interior = 0;
  for (int e = 0; e < mesh.num_tets(); ++e) {
    bool touches = false;
    for (int f : mesh.tet_faces(e)) touches = touches || mesh.face(f).boundary;
    if (touches) continue;
    ++interior;
    EXPECT_LT(ph.local(e).norm(), 1e-13);
  }
  EXPECT_GT(interior, 0);
}
