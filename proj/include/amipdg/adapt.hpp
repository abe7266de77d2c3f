#pragma once

// Doerfler marking and the SOLVE -> ESTIMATE -> MARK -> REFINE cycle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "assembly.hpp"
#include "estimator.hpp"
#include "mesh.hpp"
#include "norms.hpp"
#include "problems.hpp"
#include "solve.hpp"
#include "space.hpp"

namespace amipdg {

struct MarkConfig {
  double theta = 0.5;

  void validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  }
};

/// Smallest set M with sum_{M} eta^2 >= theta sum_T eta^2: elements are
/// taken in order of decreasing eta^2, ties by lower index. Returned in
/// selection order. All-zero indicators mark nothing.
inline std::vector<int> dorfler_mark(std::span<const double> eta2, double theta) {
  MarkConfig{theta}.validate();
  if (eta2.empty()) throw std::invalid_argument("dorfler_mark: no indicators");
  double total = 0.0;
  for (double v : eta2) {
    if (!(v >= 0.0)) throw std::invalid_argument("dorfler_mark: indicators must be non-negative");
    total += v;
  }
  std::vector<int> order(eta2.size());
  std::iota(order.begin(), order.end(), 0);
  if (total == 0.0) return {};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eta2[a] > eta2[b]; });
  const double threshold = theta * total;
  double sum = 0.0;
  std::size_t count = 0;
  while (count < order.size() && sum < threshold) sum += eta2[order[count++]];
  order.resize(count);
  return order;
}

/// Unknowns reported per iteration: u_h and p_h coefficients together.
inline long reported_dofs(const DGVectorSpace& space) { return 2L * space.num_dofs(); }

struct SolveStage {
  DiscreteSolution solution;
  SolveReport report;
  SparseSystem system;
};

/// Primal IPDG solve followed by the local recovery of p_h.
inline SolveStage solve_discrete(const std::shared_ptr<const DGVectorSpace>& space,
                                 const ManufacturedProblem& problem, double alpha) {
  SolveStage out;
  out.system = assemble_ipdg(*space, problem, alpha);
  auto [x, report] = solve_linear(out.system);
  out.report = report;
  out.solution.u = FieldFunction(space, std::move(x));
  out.solution.p = recover_p(out.solution.u, problem.coefficients);
  return out;
}

struct AdaptRecord {
  int iter = 0;
  long dofs = 0;
  double eta = 0.0;
  double dg_error = 0.0;
  double energy_error = 0.0;
  int marked = 0;
  int tets = 0;
};

struct AdaptHistory {
  std::vector<AdaptRecord> rows;
};

struct IterationState {
  int iter;
  const TetMesh& mesh;
  const SolveStage& stage;
  const IndicatorField& indicators;
};

struct AdaptOptions {
  double theta = 0.5;
  double tol = 1e-8;
  int max_iter = 20;
  double alpha = kDefaultPenalty;
  int initial_M = 2;
  int degree = 1;
  long max_dofs = 200000;
  std::function<void(const IterationState&)> on_iteration;

  void validate() const {
    MarkConfig{theta}.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (initial_M < 1) throw std::invalid_argument("initial M must be >= 1");
    if (degree < 1) throw std::invalid_argument("degree must be >= 1");
  }
};

struct AdaptResult {
  AdaptHistory history;
  std::shared_ptr<const TetMesh> mesh;
  DiscreteSolution solution;
  IndicatorField indicators;
  std::string stop_reason;
};

/// Runs the adaptive cycle until eta < tol, max_iter solves, or the next
/// mesh would exceed max_dofs.
inline AdaptResult amipdg_loop(const ManufacturedProblem& problem, const AdaptOptions& opt) {
  opt.validate();
  AdaptResult result;
  auto mesh = std::make_shared<const TetMesh>(build_unit_cube_mesh(opt.initial_M));
  for (int k = 0;; ++k) {
    try {
      auto space = std::make_shared<const DGVectorSpace>(mesh, opt.degree);
      SolveStage stage = solve_discrete(space, problem, opt.alpha);
      IndicatorField ind = compute_indicators(stage.solution, problem);
      const ErrorNorms err = exact_errors(problem, stage.solution, opt.alpha);

      AdaptRecord row;
      row.iter = k;
      row.dofs = reported_dofs(*space);
      row.eta = ind.eta();
      row.dg_error = err.dg();
      row.energy_error = err.energy();
      row.tets = mesh->num_tets();

      if (opt.on_iteration) opt.on_iteration(IterationState{k, *mesh, stage, ind});

      result.mesh = mesh;
      result.solution = stage.solution;
      result.indicators = ind;

      if (row.eta < opt.tol) {
        result.history.rows.push_back(row);
        result.stop_reason = "tolerance reached";
        break;
      }
      if (k + 1 >= opt.max_iter) {
        result.history.rows.push_back(row);
        result.stop_reason = "iteration limit";
        break;
      }
      const std::vector<int> marked = dorfler_mark(ind.per_element, opt.theta);
      row.marked = static_cast<int>(marked.size());
      result.history.rows.push_back(row);
      Refinement ref = bisect(*mesh, marked);
      if (2L * ref.mesh.num_tets() * space->dofs_per_element() > opt.max_dofs) {
        result.stop_reason = "dof budget";
        break;
      }
      mesh = std::make_shared<const TetMesh>(std::move(ref.mesh));
    } catch (const std::exception& e) {
      throw std::runtime_error("adaptive iteration " + std::to_string(k) + ": " + e.what());
    }
  }
  return result;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  int first = 0;  // window [first, last] in history rows
  int last = 0;
};

/// Least-squares line through (xs, ys).
inline SlopeFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.last = static_cast<int>(xs.size()) - 1;
  return fit;
}

/// Slope of log(eta) against log(dofs) over the last ceil(k/2) rows.
inline SlopeFit fit_eta_rate(const AdaptHistory& history) {
  const int k = static_cast<int>(history.rows.size());
  const int window = std::max(2, (k + 1) / 2);
  if (k < 2) throw std::invalid_argument("fit_eta_rate: need at least two iterations");
  std::vector<double> xs, ys;
  for (int i = k - window; i < k; ++i) {
    xs.push_back(std::log(static_cast<double>(history.rows[i].dofs)));
    ys.push_back(std::log(history.rows[i].eta));
  }
  SlopeFit fit = fit_line(xs, ys);
  fit.first = k - window;
  fit.last = k - 1;
  return fit;
}

inline void write_history_csv(std::ostream& os, const AdaptHistory& history) {
  const auto old_precision = os.precision(6);
  os << "iter,dofs,eta,dg_error,energy_error,marked,tets\n";
  for (const AdaptRecord& r : history.rows)
    os << r.iter << ',' << r.dofs << ',' << r.eta << ',' << r.dg_error << ',' << r.energy_error << ','
       << r.marked << ',' << r.tets << '\n';
  os.precision(old_precision);
}

}  // namespace amipdg
