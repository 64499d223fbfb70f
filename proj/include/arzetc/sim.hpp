#ifndef ARZETC_SIM_HPP_
#define ARZETC_SIM_HPP_

#include "arzetc/controller.hpp"
#include "arzetc/kernels.hpp"
#include "arzetc/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace arzetc
{

enum class Mode { open_loop, continuous, event_triggered };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string & name);

/// Sinusoidal perturbation of the physical state around the equilibrium:
/// rho_i = rho_i* (1 + amp_rho sin(2 pi k x / L)), v_i = v_i* (1 + amp_v sin(...)).
struct InitialCondition
{
  double amp_rho = 0.1;
  double amp_v = 0.1;
  int wavenumber = 1;

  bool operator==(const InitialCondition &) const = default;
};

struct SimConfig
{
  int n_x = 200;
  double cfl = 0.8;
  double t_end = 450.0;
  Mode mode = Mode::event_triggered;
  InitialCondition initial;
  int output_stride = 10;        ///< physical snapshot every n-th step
  double blowup_factor = 1e6;

  void validate() const;
  bool operator==(const SimConfig &) const = default;
};

/// Everything a closed-loop run needs that does not change with the mode.
struct Plant
{
  ModelParams model;
  LinearizedSystem sys;
  KernelSet direct;
  InverseKernelSet inverse;
  EtcParams etc;
};

/// Linearize at eq and solve both kernel pairs on an n_cells grid.
Plant make_plant(const ModelParams & model, const Equilibrium & eq, const EtcParams & etc,
                 int n_cells, const KernelSolverOptions & opts = {});

struct SimState
{
  double t = 0.0;
  double dx = 0.0;
  RiemannField w;
};

/// Absolute physical fields (SI) on the x-grid.
struct PhysicalFields
{
  Eigen::VectorXd rho_h, v_h, rho_a, v_a;
};

struct FieldSnapshot
{
  double t = 0.0;
  PhysicalFields fields;
};

struct NormSample
{
  double t = 0.0;
  double l2_w = 0.0;
  double V = 0.0;
  double V_d = 0.0;
  double beta_at_L = 0.0;  ///< target-system outlet value beta(L, t)
};

struct TriggerEvent
{
  int k = 0;
  double t = 0.0;
  double interval = 0.0;  ///< t_k - t_{k-1}; 0 for the first event
};

struct SimResult
{
  Mode mode = Mode::open_loop;
  double dt = 0.0;
  int steps = 0;
  Eigen::VectorXd x;
  std::vector<FieldSnapshot> snapshots;
  std::vector<ControlSample> control;   ///< empty in open loop
  std::vector<TriggerEvent> triggers;
  std::vector<NormSample> norms;        ///< steps + 1 samples
  RiemannField w_initial;
  RiemannField w_final;
};

struct RunMetrics
{
  int trigger_count = 0;
  int step_count = 0;
  double min_interval = 0.0;
  double mean_interval = 0.0;
  double max_interval = 0.0;
  double decay_ratio = 0.0;        ///< ||w(T)|| / ||w(0)||; NaN when already at equilibrium
  bool at_equilibrium = false;
  double fitted_decay_rate = 0.0;  ///< least-squares rate of ln V_d(t)
  double certificate_rate = 0.0;   ///< mu (1 - sigma) - gamma
};

/// Upwind scheme with coupling coefficients cached on the grid nodes.
class UpwindScheme
{
public:
  UpwindScheme(const LinearizedSystem & sys, int n_x);

  /// One explicit step: w+ advected right, w- advected left, coupling from
  /// the old level, then w+(0) = Q w-(0) and w-(L) = R w+(L) + u_bar.
  /// `forcing`, when given, is added to the right-hand side at the old level.
  SimState advance(const SimState & state, double u_bar, double dt,
                   const RiemannField * forcing = nullptr) const;

  double dx() const { return dx_; }
  const Eigen::VectorXd & x() const { return x_; }
  double max_stable_dt() const { return dx_ / sys_.max_speed(); }

private:
  const LinearizedSystem & sys_;
  int n_x_;
  double dx_;
  Eigen::VectorXd x_;
  std::vector<Eigen::Matrix4d> sigma_;
};

/// Continuous feedback closed at the new time level: given a state whose
/// interior and inlet are already advanced, returns the input that makes
/// w-(L) = R w+(L) + U_bar[w] hold with U_bar the direct-kernel law. The law
/// is affine in w-(L), so this is one scalar solve.
double implicit_boundary_control(const RiemannField & w, const KernelSet & kernels,
                                 const LinearizedSystem & sys);

SimState init_state(const SimConfig & cfg, const LinearizedSystem & sys);

/// Free-function form of UpwindScheme::advance. Throws NumericalError when
/// dt violates the CFL condition.
SimState step(const SimState & state, double u_bar, const LinearizedSystem & sys, double dt);

SimResult run_closed_loop(const SimConfig & cfg, const Plant & plant);

PhysicalFields reconstruct_physical(const RiemannField & w, const Eigen::VectorXd & x,
                                    const LinearizedSystem & sys);

RunMetrics metrics(const SimResult & result, const Plant & plant);

}  // namespace arzetc

#endif  // ARZETC_SIM_HPP_
