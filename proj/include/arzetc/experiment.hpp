#ifndef ARZETC_EXPERIMENT_HPP_
#define ARZETC_EXPERIMENT_HPP_

#include "arzetc/config.hpp"
#include "arzetc/controller.hpp"
#include "arzetc/sim.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace arzetc
{

struct RunSummary
{
  std::string run_id;
  std::string config_hash;   ///< full FNV-1a of the plan's canonical JSON
  double s_a = 0.0;
  Mode mode = Mode::event_triggered;
  int n_x = 0;
  double dt = 0.0;
  Eigen::Vector4d lambda = Eigen::Vector4d::Zero();
  RunMetrics metrics;
  ValidationReport validation;
};

/// Runs every plan of cfg, writes out_dir/<run_id>/{fields,norms}.csv (plus
/// control.csv and triggers.csv for controlled modes) and out_dir/summary.txt.
/// Kernels are solved once per spacing and shared by its modes.
std::vector<RunSummary> run_experiment(const ScenarioConfig & cfg);

/// Per-run CSV bundle. Units: t [s], x [m], densities [veh/km], speeds [km/h],
/// controls in normalized coordinates except u_physical [veh/h].
void write_run_csv(const std::filesystem::path & dir, const SimResult & result);

std::string summary_text(const std::vector<RunSummary> & runs);

/// One CSV per kernel component with columns x, xi, value (nodes with xi <= x).
void write_kernel_csv(const std::filesystem::path & dir, const KernelSet & direct,
                      const InverseKernelSet & inverse);

/// Writes v with 17 significant digits.
void write_number(std::ostream & out, double v);

}  // namespace arzetc

#endif  // ARZETC_EXPERIMENT_HPP_
