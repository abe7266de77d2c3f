#pragma once

// Direct sparse solves and extremal-eigenvalue condition estimates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/CholmodSupport>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "assembly.hpp"

namespace amipdg {

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  double residual_norm = 0.0;  // ||Ax - b|| / ||b||, recomputed from the raw matrix
  double factor_time = 0.0;    // seconds
  std::optional<double> cond_estimate;
  std::string method;
  int refinement_steps = 0;
};

namespace detail {

/// Factorization behind a uniform solve interface. Symmetric systems try
/// supernodal Cholesky, then simplicial Cholesky (some optimized BLAS
/// kernels misreport pivots in the supernodal path), and fall back to LU
/// when the matrix is not positive definite (small penalties make the
/// IPDG form indefinite).
class Factorization {
 public:
  Factorization(const Eigen::SparseMatrix<double>& a, bool symmetric, const std::string& kind) {
    if (a.rows() != a.cols()) throw SolveError(kind + " system: matrix is not square");
    if (symmetric) {
      auto super = std::make_unique<Eigen::CholmodSupernodalLLT<Matrix>>();
      super->cholmod().print = 0;
      super->compute(a);
      if (super->info() == Eigen::Success) {
        super_ = std::move(super);
        method_ = "cholmod-supernodal";
        return;
      }
      auto simplicial = std::make_unique<Eigen::CholmodSimplicialLLT<Matrix>>();
      simplicial->cholmod().print = 0;
      simplicial->compute(a);
      if (simplicial->info() == Eigen::Success) {
        simplicial_ = std::move(simplicial);
        method_ = "cholmod-simplicial";
        return;
      }
    }
    lu_ = std::make_unique<Eigen::SparseLU<Matrix>>();
    Matrix compressed = a;
    compressed.makeCompressed();
    lu_->compute(compressed);
    if (lu_->info() != Eigen::Success)
      throw SolveError(kind + " system: factorization failed (" + lu_->lastErrorMessage() + ")");
    method_ = "sparse-lu";
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (super_) return super_->solve(b);
    if (simplicial_) return simplicial_->solve(b);
    return lu_->solve(b);
  }

  bool positive_definite() const { return super_ || simplicial_; }
  const std::string& method() const { return method_; }

 private:
  using Matrix = Eigen::SparseMatrix<double>;
  std::unique_ptr<Eigen::CholmodSupernodalLLT<Matrix>> super_;
  std::unique_ptr<Eigen::CholmodSimplicialLLT<Matrix>> simplicial_;
  std::unique_ptr<Eigen::SparseLU<Matrix>> lu_;
  std::string method_;
};

inline double relative_residual(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& b) {
  const double r = (a * x - b).norm();
  const double nb = b.norm();
  return nb > 0.0 ? r / nb : r;
}

}  // namespace detail

/// Solves A x = b. The residual is recomputed from the assembled matrix and
/// improved by iterative refinement if needed; failing to reach `tolerance`
/// throws SolveError naming the system kind.
inline std::pair<Eigen::VectorXd, SolveReport> solve_linear(const SparseSystem& system,
                                                            double tolerance = 1e-10) {
  const std::string kind = to_string(system.kind);
  if (system.rhs.size() != system.matrix.rows())
    throw SolveError(kind + " system: right-hand side length does not match the matrix");
  SolveReport report;
  const auto start = std::chrono::steady_clock::now();
  const detail::Factorization factor(system.matrix, system.kind == SystemKind::primal, kind);
  report.factor_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.method = factor.method();

  Eigen::VectorXd x = factor.solve(system.rhs);
  report.residual_norm = detail::relative_residual(system.matrix, x, system.rhs);
  for (int step = 0; step < 5 && report.residual_norm > tolerance; ++step) {
    x += factor.solve(system.rhs - system.matrix * x);
    report.residual_norm = detail::relative_residual(system.matrix, x, system.rhs);
    report.refinement_steps = step + 1;
  }
  if (!std::isfinite(report.residual_norm) || report.residual_norm > tolerance)
    throw SolveError(kind + " system: relative residual " + std::to_string(report.residual_norm) +
                     " above tolerance");
  return {std::move(x), report};
}

struct ConditionEstimate {
  double value = std::numeric_limits<double>::quiet_NaN();
  double lambda_max = 0.0;  // largest |eigenvalue|
  double lambda_min = 0.0;  // smallest |eigenvalue|
  bool converged = false;
  bool indefinite = false;
};

namespace detail {

struct RitzExtremes {
  double low = 0.0;
  double high = 0.0;
  bool converged = false;
};

/// Lanczos with full reorthogonalisation; returns the extreme Ritz values
/// of a symmetric operator once both have stabilised to `tol`.
inline RitzExtremes lanczos_extremes(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                                     int n, int max_steps = 300, double tol = 1e-9) {
  max_steps = std::min(max_steps, n);
  std::mt19937 rng(20240917u);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd basis(n, max_steps + 1);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  basis.col(0) = v.normalized();
  std::vector<double> alpha, beta;
  RitzExtremes out;
  double prev_low = 0.0, prev_high = 0.0;
  for (int k = 0; k < max_steps; ++k) {
    Eigen::VectorXd w = op(basis.col(k));
    const double a = basis.col(k).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    const int m = k + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t, Eigen::EigenvaluesOnly);
    out.low = eig.eigenvalues()[0];
    out.high = eig.eigenvalues()[m - 1];
    const double scale = std::max(std::abs(out.low), std::abs(out.high));
    if (m >= 5 && std::abs(out.low - prev_low) <= tol * scale &&
        std::abs(out.high - prev_high) <= tol * scale) {
      out.converged = true;
      return out;
    }
    prev_low = out.low;
    prev_high = out.high;
    if (b <= 1e-14 * scale || m == n) {  // invariant subspace found
      out.converged = true;
      return out;
    }
    beta.push_back(b);
    basis.col(k + 1) = w / b;
  }
  return out;
}

}  // namespace detail

/// lambda_max / lambda_min (in magnitude) of a symmetric matrix. Dense
/// eigenvalues below `dense_limit` rows, Lanczos on A and on A^{-1} above.
inline ConditionEstimate condition_estimate(const SparseSystem& system, int dense_limit = 1500) {
  const auto& a = system.matrix;
  if (a.rows() != a.cols()) throw SolveError("condition_estimate: matrix is not square");
  ConditionEstimate est;
  const int n = static_cast<int>(a.rows());
  if (n == 0) return est;
  if (n <= dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(a), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = eig.eigenvalues();
    est.lambda_max = ev.cwiseAbs().maxCoeff();
    est.lambda_min = ev.cwiseAbs().minCoeff();
    est.indefinite = ev[0] < 0.0;
    est.converged = eig.info() == Eigen::Success;
  } else {
    const auto forward =
        detail::lanczos_extremes([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; }, n);
    const detail::Factorization factor(a, true, to_string(system.kind));
    const auto inverse = detail::lanczos_extremes(
        [&](const Eigen::VectorXd& x) { return factor.solve(x); }, n);
    est.lambda_max = std::max(std::abs(forward.low), std::abs(forward.high));
    est.lambda_min = 1.0 / std::max(std::abs(inverse.low), std::abs(inverse.high));
    est.indefinite = !factor.positive_definite();
    est.converged = forward.converged && inverse.converged;
  }
  est.value = est.lambda_max / est.lambda_min;
  return est;
}

}  // namespace amipdg
