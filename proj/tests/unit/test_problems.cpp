#include <gtest/gtest.h>

#include <random>

#include <amipdg/problems.hpp>

using namespace amipdg;

namespace {

Eigen::Vector3d fd_curl(const VectorField& v, const Point& x, double h) {
  Eigen::Matrix3d jac;
  for (int d = 0; d < 3; ++d) jac.col(d) = (v(x + h * Point::Unit(d)) - v(x - h * Point::Unit(d))) / (2 * h);
  return {jac(2, 1) - jac(1, 2), jac(0, 2) - jac(2, 0), jac(1, 0) - jac(0, 1)};
}

double fd_div(const VectorField& v, const Point& x, double h) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (v(x + h * Point::Unit(d))[d] - v(x - h * Point::Unit(d))[d]) / (2 * h);
  return s;
}

class ProblemTest : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(ProblemTest, CurlMatchesFiniteDifferences) {
  const ManufacturedProblem p = problem_by_name(GetParam());
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 50; ++i) {
    const Point x(u(rng), u(rng), u(rng));
    const Eigen::Vector3d exact = p.exact_curl_u(x);
    EXPECT_LE((fd_curl(p.exact_u, x, 1e-5) - exact).norm(), 1e-6 * std::max(1.0, exact.norm()));
  }
}

TEST_P(ProblemTest, RightHandSideMatchesFiniteDifferenceCurlCurl) {
  const ManufacturedProblem p = problem_by_name(GetParam());
  const VectorField curl = [&](const Point& x) { return fd_curl(p.exact_u, x, 1e-5); };
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 50; ++i) {
    const Point x(u(rng), u(rng), u(rng));
    const Eigen::Vector3d fd = fd_curl(curl, x, 1e-4) + p.coefficients.kappa(x) * p.exact_u(x);
    const Eigen::Vector3d f = p.rhs_f(x);
    EXPECT_LE((fd - f).norm(), 1e-4 * std::max(1.0, f.norm())) << x.transpose();
  }
}

TEST_P(ProblemTest, DivergenceOfDataMatchesFiniteDifferences) {
  const ManufacturedProblem p = problem_by_name(GetParam());
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 50; ++i) {
    const Point x(u(rng), u(rng), u(rng));
    const double exact = p.div_f(x);
    EXPECT_LE(std::abs(fd_div(p.rhs_f, x, 1e-5) - exact), 1e-5 * std::max(1.0, std::abs(exact)));
  }
}

TEST_P(ProblemTest, TangentialTraceVanishesOnBoundary) {
  const ManufacturedProblem p = problem_by_name(GetParam());
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> side(0, 5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Point x(u(rng), u(rng), u(rng));
    const int s = side(rng);
    x[s / 2] = s % 2;
    const Point n = Point::Unit(s / 2) * (s % 2 ? 1.0 : -1.0);
    worst = std::max(worst, p.exact_u(x).cross(n).norm());
  }
  EXPECT_LE(worst, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Examples, ProblemTest, ::testing::Values("example1", "example2"));

TEST(Problems, ExampleOneSpotValues) {
  const ManufacturedProblem p = example1();
  EXPECT_TRUE(p.exact_u(Point(0, 0.3, 0.7)).isZero(0.0));
  const Point c(0.5, 0.5, 0.5);
  const double e = (1 - std::exp(0.5)) * (1 - std::exp(-0.5));
  EXPECT_TRUE(p.exact_u(c).isApprox(Eigen::Vector3d(-1.0 / 64, 1.0, e * e * e), 1e-14));
  EXPECT_TRUE(p.exact_p(c).isApprox(p.exact_curl_u(c)));
}

TEST(Problems, ExampleTwoIsPeakedAlongFixedDirection) {
  const ManufacturedProblem p = example2();
  const Point x(0.1, 0.2, 0.3);
  const Eigen::Vector3d u = p.exact_u(x);
  EXPECT_NEAR(u[0], u[1], 1e-15);
  EXPECT_NEAR(u[0], -u[2], 1e-15);
  const double g = 0.1 * -0.9 * 0.2 * -0.8 * 0.3 * -0.7 / (0.14 + 0.001);
  EXPECT_NEAR(u[0], g, 1e-15);
}

TEST(Problems, UnknownIdThrows) { EXPECT_THROW(problem_by_name("example3"), std::invalid_argument); }
