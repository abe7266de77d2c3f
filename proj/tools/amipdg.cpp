#include <exception>
#include <iomanip>
#include <iostream>

#include <amipdg/experiments.hpp>

int main(int argc, char** argv) {
  try {
    const amipdg::RunConfig cfg = amipdg::parse_config(argc, argv);
    const amipdg::RunSummary summary = amipdg::run_experiment(cfg);

    if (!summary.table.empty()) {
      std::cout << std::setw(10) << "alpha" << std::setw(14) << "dg error" << std::setw(14) << "cond\n";
      for (const auto& r : summary.table)
        std::cout << std::setw(10) << r.alpha << std::setw(14) << r.dg_error << std::setw(14) << r.cond.value
                  << (r.cond.indefinite ? "  (indefinite)" : "") << '\n';
    }
    for (const auto& r : summary.history.rows)
      std::cout << "iter " << std::setw(3) << r.iter << "  dofs " << std::setw(8) << r.dofs << "  eta "
                << std::setw(12) << r.eta << "  dg error " << std::setw(12) << r.dg_error << '\n';
    if (summary.eta_rate)
      std::cout << "eta ~ N^" << summary.eta_rate->slope << " over rows " << summary.eta_rate->first << ".."
                << summary.eta_rate->last << '\n';
    if (summary.error_rate) std::cout << "dg error ~ h^" << summary.error_rate->slope << '\n';
    if (!summary.stop_reason.empty()) std::cout << "stopped: " << summary.stop_reason << '\n';
    std::cout << "wrote " << summary.files.size() << " files to " << cfg.out << '\n';
    return 0;
  } catch (const amipdg::UsageError& e) {
    (e.exit_code() == 0 ? std::cout : std::cerr) << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "amipdg: " << e.what() << '\n';
    return 1;
  }
}
