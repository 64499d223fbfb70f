#ifndef ARZETC_CONFIG_HPP_
#define ARZETC_CONFIG_HPP_

#include "arzetc/controller.hpp"
#include "arzetc/kernels.hpp"
#include "arzetc/model.hpp"
#include "arzetc/sim.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace arzetc
{

/// Per-class constants as written in a scenario file. The free-flow speed is
/// not an input: each run calibrates it so the equilibrium targets hold.
struct ClassConfig
{
  double tau = 1.0;
  double gamma = 1.0;
  double s_gap = 0.0;
  double AO_max = 1.0;

  bool operator==(const ClassConfig &) const = default;
};

/// Equilibrium targets in reporting units: veh/km and km/h.
struct EquilibriumTargets
{
  double rho_h = 150.0;
  double rho_a = 75.0;
  double v_h = 29.16;
  double v_a = 13.32;

  bool operator==(const EquilibriumTargets &) const = default;
};

struct ScenarioConfig
{
  ClassConfig hv;
  ClassConfig av;
  RoadParams road;
  EquilibriumTargets equilibrium;
  EtcParams etc;
  SimConfig sim;                    ///< sim.mode is unused; see modes
  std::vector<Mode> modes;
  KernelSolverOptions kernels;
  std::vector<double> sweep_s_a;    ///< empty: single run at av.s_gap
  std::string out_dir = "out";

  bool operator==(const ScenarioConfig &) const = default;
};

/// Reference scenario: both control modes on the 16 m / 20 m spacing sweep.
ScenarioConfig paper_s5();

/// Parse a JSON scenario. With "preset" present the document is merged over
/// the preset; otherwise every key is required. Unknown keys, missing keys and
/// invariant violations raise ConfigError naming the key path.
ScenarioConfig parse_config(const std::string & json_text);
ScenarioConfig load_config(const std::filesystem::path & path);

/// Complete (preset-free) JSON document; parse_config(to_json(c)) == c.
std::string to_json(const ScenarioConfig & cfg, int indent = 2);

/// One fully resolved simulation.
struct RunPlan
{
  double s_a = 0.0;
  Mode mode = Mode::event_triggered;
  ModelParams model;                ///< SI, with calibrated free-flow speeds
  Equilibrium equilibrium;          ///< SI
  EtcParams etc;
  SimConfig sim;
  KernelSolverOptions kernels;
  std::string canonical;            ///< canonical JSON of everything above
  std::string run_id;
};

/// Spacing sweep x modes, in that nesting order. Calibration errors surface
/// as CalibrationError.
std::vector<RunPlan> make_run_plans(const ScenarioConfig & cfg);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string content_hash(const std::string & text);

}  // namespace arzetc

#endif  // ARZETC_CONFIG_HPP_
