#pragma once

// Run configuration and drivers behind the command-line tool: penalty
// sweeps, uniform refinement studies and adaptive runs with file output.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adapt.hpp"
#include "io.hpp"
#include "norms.hpp"
#include "solve.hpp"

namespace amipdg {

/// Bad command line or configuration. `exit_code` is 0 for --help.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what, int exit_code = 2)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

struct RunConfig {
  std::string problem = "example2";
  std::string mode = "adaptive";  // uniform | adaptive | table1
  int M = 2;
  double theta = 0.5;
  double alpha = kDefaultPenalty;
  double tol = 1e-8;
  int max_iter = 20;
  int degree = 1;
  long max_dofs = 200000;
  std::vector<double> alphas{1.0, 10.0, 100.0, 500.0, 1000.0};
  std::string out = "amipdg-out";
  bool dump_system = false;
  int vtk_every = 0;  // 0 disables per-iteration meshes

  void validate() const {
    if (mode != "uniform" && mode != "adaptive" && mode != "table1")
      throw UsageError("--mode must be uniform, adaptive or table1");
    try {
      (void)problem_by_name(problem);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (mode == "adaptive" && !(theta > 0.0 && theta < 1.0)) throw UsageError("--theta must lie in (0, 1)");
    if (!(alpha > 0.0)) throw UsageError("--alpha must be positive");
    for (double a : alphas)
      if (!(a > 0.0)) throw UsageError("--alphas entries must be positive");
    if (!(tol > 0.0)) throw UsageError("--tol must be positive");
    if (M < 1) throw UsageError("--M must be >= 1");
    if (max_iter < 1) throw UsageError("--max-iter must be >= 1");
    if (degree < 1) throw UsageError("--degree must be >= 1");
    if (max_dofs < 1) throw UsageError("--max-dofs must be >= 1");
    if (vtk_every < 0) throw UsageError("--vtk-every must be >= 0");
  }
};

namespace detail {

inline void bind_options(CLI::App& app, RunConfig& cfg) {
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.add_option("--problem", cfg.problem, "example1 | example2");
  app.add_option("--mode", cfg.mode, "uniform | adaptive | table1");
  app.add_option("--M", cfg.M, "cells per side of the initial cube mesh");
  app.add_option("--theta", cfg.theta, "bulk marking fraction in (0, 1)");
  app.add_option("--alpha", cfg.alpha, "penalty parameter");
  app.add_option("--alphas", cfg.alphas, "penalty values for table1 mode")->delimiter(',');
  app.add_option("--tol", cfg.tol, "stop once eta drops below this");
  app.add_option("--max-iter", cfg.max_iter, "number of solves (adaptive) or mesh levels (uniform)");
  app.add_option("--max-dofs", cfg.max_dofs, "adaptive runs stop before exceeding this many unknowns");
  app.add_option("--degree", cfg.degree, "polynomial degree");
  app.add_option("--out", cfg.out, "output directory");
  app.add_flag("--dump-system", cfg.dump_system, "write each assembled system in MatrixMarket format");
  app.add_option("--vtk-every", cfg.vtk_every, "write the mesh every N iterations (0: final mesh only)");
}

}  // namespace detail

/// Parses argv[1..]. Values from --config are overridden by explicit flags;
/// unknown flags and invalid values raise UsageError.
inline RunConfig parse_config(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"Adaptive mixed interior penalty DG solver for curl-curl problems", "amipdg"};
  detail::bind_options(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\nRun with --help for usage.");
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"amipdg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

struct Table1Row {
  double alpha = 0.0;
  double dg_error = 0.0;
  double energy_error = 0.0;
  ConditionEstimate cond;
};

/// DG error and condition number of the primal matrix for each penalty on
/// the uniform mesh with h = 1/M.
inline std::vector<Table1Row> run_table1(const ManufacturedProblem& problem, const std::vector<double>& alphas,
                                         int M, int degree = 1) {
  if (M < 1) throw std::invalid_argument("run_table1: M must be >= 1");
  std::vector<Table1Row> rows;
  if (alphas.empty()) return rows;
  auto mesh = std::make_shared<const TetMesh>(build_unit_cube_mesh(M));
  auto space = std::make_shared<const DGVectorSpace>(mesh, degree);
  for (double alpha : alphas) {
    const SolveStage stage = solve_discrete(space, problem, alpha);
    const ErrorNorms err = exact_errors(problem, stage.solution, alpha);
    rows.push_back({alpha, err.dg(), err.energy(), condition_estimate(stage.system)});
  }
  return rows;
}

inline void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
  const auto old_precision = os.precision(6);
  os << "alpha,dg_error,energy_error,cond,indefinite\n";
  for (const Table1Row& r : rows)
    os << r.alpha << ',' << r.dg_error << ',' << r.energy_error << ',' << r.cond.value << ','
       << (r.cond.indefinite ? 1 : 0) << '\n';
  os.precision(old_precision);
}

/// One solve per mesh level M, 2M, 4M, ... (levels = max_iter).
inline AdaptHistory run_uniform_history(const ManufacturedProblem& problem, int M, int levels, double alpha,
                                        int degree = 1,
                                        const std::function<void(const IterationState&)>& on_level = {}) {
  if (M < 1 || levels < 1) throw std::invalid_argument("run_uniform: M and levels must be >= 1");
  AdaptHistory history;
  for (int k = 0; k < levels; ++k) {
    auto mesh = std::make_shared<const TetMesh>(build_unit_cube_mesh(M << k));
    auto space = std::make_shared<const DGVectorSpace>(mesh, degree);
    const SolveStage stage = solve_discrete(space, problem, alpha);
    const IndicatorField ind = compute_indicators(stage.solution, problem);
    const ErrorNorms err = exact_errors(problem, stage.solution, alpha);
    history.rows.push_back(
        {k, reported_dofs(*space), ind.eta(), err.dg(), err.energy(), 0, mesh->num_tets()});
    if (on_level) on_level(IterationState{k, *mesh, stage, ind});
  }
  return history;
}

/// Least-squares slope of log(dg_error) against log(h) with h = 1/(M 2^k).
inline SlopeFit fit_error_rate(const AdaptHistory& history, int M) {
  std::vector<double> xs, ys;
  for (const AdaptRecord& r : history.rows) {
    xs.push_back(-std::log(static_cast<double>(M << r.iter)));
    ys.push_back(std::log(r.dg_error));
  }
  return fit_line(xs, ys);
}

struct RunSummary {
  AdaptHistory history;
  std::vector<Table1Row> table;
  std::optional<SlopeFit> eta_rate;
  std::optional<SlopeFit> error_rate;
  std::string stop_reason;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline nlohmann::json slope_json(const SlopeFit& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"first_row", fit.first}, {"last_row", fit.last}};
}

inline nlohmann::json config_json(const RunConfig& cfg) {
  return {{"problem", cfg.problem}, {"mode", cfg.mode},       {"M", cfg.M},
          {"theta", cfg.theta},     {"alpha", cfg.alpha},     {"tol", cfg.tol},
          {"max_iter", cfg.max_iter}, {"degree", cfg.degree}, {"max_dofs", cfg.max_dofs}};
}

class OutputSink {
 public:
  OutputSink(const RunConfig& cfg, RunSummary& summary) : dir_(cfg.out), summary_(summary) {}

  std::ofstream open(const std::string& name) {
    summary_.files.push_back(dir_ / name);
    return open_output(summary_.files.back());
  }

  void vtk(const std::string& name, const TetMesh& mesh, const IndicatorField& ind) {
    summary_.files.push_back(dir_ / name);
    write_vtk_file(summary_.files.back(), mesh, indicator_fields(ind));
  }

  void system(const std::string& stem, const SparseSystem& sys) {
    auto [m, r] = dump_system(sys, dir_ / stem);
    summary_.files.push_back(m);
    summary_.files.push_back(r);
  }

 private:
  std::filesystem::path dir_;
  RunSummary& summary_;
};

inline std::string iteration_tag(int k) {
  std::ostringstream os;
  os << "iter" << std::setw(3) << std::setfill('0') << k;
  return os.str();
}

}  // namespace detail

/// Executes the configured experiment and writes its files under cfg.out:
/// history.csv / table1.csv, summary.json, indicators.csv and VTK meshes.
inline RunSummary run_experiment(const RunConfig& cfg) {
  cfg.validate();
  const ManufacturedProblem problem = problem_by_name(cfg.problem);
  RunSummary summary;
  detail::OutputSink sink(cfg, summary);
  nlohmann::json meta;
  meta["config"] = detail::config_json(cfg);

  if (cfg.mode == "table1") {
    summary.table = run_table1(problem, cfg.alphas, cfg.M, cfg.degree);
    auto os = sink.open("table1.csv");
    write_table1_csv(os, summary.table);
    meta["config"]["alphas"] = cfg.alphas;
  } else {
    std::optional<IndicatorField> last_ind;
    std::shared_ptr<const TetMesh> last_mesh;
    auto per_iteration = [&](const IterationState& s) {
      const std::string tag = detail::iteration_tag(s.iter);
      if (cfg.vtk_every > 0 && s.iter % cfg.vtk_every == 0) sink.vtk("mesh_" + tag + ".vtk", s.mesh, s.indicators);
      if (cfg.dump_system) sink.system("system_" + tag, s.stage.system);
    };
    if (cfg.mode == "uniform") {
      summary.history = run_uniform_history(problem, cfg.M, cfg.max_iter, cfg.alpha, cfg.degree,
                                            [&](const IterationState& s) {
                                              per_iteration(s);
                                              last_ind = s.indicators;
                                              last_mesh = std::make_shared<const TetMesh>(s.mesh);
                                            });
      summary.stop_reason = "level limit";
      if (summary.history.rows.size() >= 2) summary.error_rate = fit_error_rate(summary.history, cfg.M);
    } else {
      AdaptOptions opt;
      opt.theta = cfg.theta;
      opt.tol = cfg.tol;
      opt.max_iter = cfg.max_iter;
      opt.alpha = cfg.alpha;
      opt.initial_M = cfg.M;
      opt.degree = cfg.degree;
      opt.max_dofs = cfg.max_dofs;
      opt.on_iteration = per_iteration;
      AdaptResult result = amipdg_loop(problem, opt);
      summary.history = std::move(result.history);
      summary.stop_reason = result.stop_reason;
      last_ind = std::move(result.indicators);
      last_mesh = result.mesh;
    }
    if (summary.history.rows.size() >= 2) summary.eta_rate = fit_eta_rate(summary.history);
    {
      auto os = sink.open("history.csv");
      write_history_csv(os, summary.history);
    }
    {
      auto os = sink.open("indicators.csv");
      write_indicator_csv(os, *last_ind);
    }
    sink.vtk("mesh_final.vtk", *last_mesh, *last_ind);
    meta["stop_reason"] = summary.stop_reason;
    meta["iterations"] = summary.history.rows.size();
    if (summary.eta_rate) meta["eta_rate_vs_dofs"] = detail::slope_json(*summary.eta_rate);
    if (summary.error_rate) meta["dg_error_rate_vs_h"] = detail::slope_json(*summary.error_rate);
  }
  auto os = sink.open("summary.json");
  os << meta.dump(2) << '\n';
  return summary;
}

}  // namespace amipdg
