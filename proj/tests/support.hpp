#ifndef ARZETC_TESTS_SUPPORT_HPP_
#define ARZETC_TESTS_SUPPORT_HPP_

#include "arzetc/config.hpp"
#include "arzetc/sim.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace arzetc::test
{

inline RunPlan paper_plan(double s_a = 16.0, Mode mode = Mode::event_triggered)
{
  ScenarioConfig cfg = paper_s5();
  cfg.sweep_s_a = {s_a};
  cfg.modes = {mode};
  return make_run_plans(cfg).front();
}

inline LinearizedSystem paper_system(double s_a = 16.0)
{
  const RunPlan plan = paper_plan(s_a);
  return linearize(plan.model, plan.equilibrium);
}

/// Plants are expensive at fine grids; tests share them per (s_a, n).
inline const Plant & paper_plant(int n_cells, double s_a = 16.0)
{
  static std::map<std::pair<double, int>, std::unique_ptr<Plant>> cache;
  auto & slot = cache[{s_a, n_cells}];
  if (!slot) {
    const RunPlan plan = paper_plan(s_a);
    slot = std::make_unique<Plant>(
      make_plant(plan.model, plan.equilibrium, plan.etc, n_cells, plan.kernels));
  }
  return *slot;
}

/// Smooth deterministic field on n + 1 uniform nodes.
inline RiemannField smooth_field(int n, double phase = 0.0)
{
  RiemannField w(4, n + 1);
  for (int j = 0; j <= n; ++j) {
    const double s = j / static_cast<double>(n);
    w(0, j) = std::sin(2.0 * M_PI * s + phase);
    w(1, j) = std::cos(M_PI * s) + 0.5 * s;
    w(2, j) = s * (1.0 - s) * 4.0;
    w(3, j) = std::cos(3.0 * s + phase) - 0.2;
  }
  return w;
}

inline RiemannField random_field(int n, std::mt19937_64 & rng, double scale = 1.0)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  RiemannField w(4, n + 1);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w.data()[j] = u(rng);
  }
  return w;
}

/// Least-squares slope of log(err) against log(h).
inline double fitted_order(const std::vector<double> & h, const std::vector<double> & err)
{
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double x = std::log(h[k]);
    const double y = std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::filesystem::path scratch_dir(const std::string & name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("arzetc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace arzetc::test

#endif  // ARZETC_TESTS_SUPPORT_HPP_
