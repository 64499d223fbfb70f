#ifndef ARZETC_CONTROLLER_HPP_
#define ARZETC_CONTROLLER_HPP_

#include "arzetc/kernels.hpp"
#include "arzetc/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace arzetc
{

/// Tuning constants of the dynamic event-triggering mechanism and of the
/// Lyapunov functional it supervises.
struct EtcParams
{
  double zeta = 8e-3;
  double sigma = 1e-4;
  double eta = 0.9;
  double mu = 5e-4;
  Eigen::Vector3d A = Eigen::Vector3d(2e-2, 3e-3, 4e-3);
  double B = 9e-3;
  Eigen::Vector4d varsigma = Eigen::Vector4d(2e-10, 2e-9, 1.2e-12, 1e-2);
  double m0 = 0.0;

  void validate() const;
  bool operator==(const EtcParams &) const = default;
};

struct InequalityCheck
{
  std::string name;
  double lhs = 0.0;
  std::string relation;  ///< ">=" or "<=" or ">"
  double rhs = 0.0;
  double margin = 0.0;   ///< positive when satisfied
  bool pass = false;
};

struct EtcDerivedConstants
{
  double boundary_gain = 0.0;    ///< B exp(mu L / Lambda-)
  double theta_direct = 0.0;     ///< operator norms of the two transforms
  double theta_inverse = 0.0;
  double p1 = 0.0, p2 = 0.0;     ///< p1 ||w||^2 <= ||target||^2 <= p2 ||w||^2
  double p3 = 0.0, p4 = 0.0;     ///< p3 ||target||^2 <= V <= p4 ||target||^2
  double gamma_rate = 0.0;
  Eigen::Vector3d eps = Eigen::Vector3d::Zero();               ///< 8 l_i(L,L)^2 lambda_i^2
  Eigen::Vector3d eps_first_power = Eigen::Vector3d::Zero();   ///< 8 l_i(L,L)^2 lambda_i
  double phi1 = 0.0;             ///< d-dot bound: coefficient of d^2
  double phi2 = 0.0;             ///< d-dot bound: coefficient of V
  double c1 = 0.0, c2 = 0.0;
  /// Comparison bound dPsi/dt <= a Psi^2 + b Psi + c used for the dwell time.
  double dwell_a = 0.0, dwell_b = 0.0, dwell_c = 0.0;
  double tau_star = 0.0;         ///< minimal dwell time [s]
  double decay_rate = 0.0;       ///< mu (1 - sigma) - gamma
};

struct ValidationReport
{
  EtcDerivedConstants constants;
  std::vector<InequalityCheck> checks;

  bool all_pass() const;
  /// All inequalities hold and the certified decay rate is positive.
  bool certificate() const { return all_pass() && constants.decay_rate > 0.0; }
  std::string to_table() const;
};

/// Backstepping law on the plant state:
/// U_bar = int_0^L K(L,xi) w+ + M(L,xi) w- dxi - R w+(L).
double continuous_control(const RiemannField & w, const KernelSet & kernels,
                          const LinearizedSystem & sys);

/// The same law evaluated from the target state with the inverse kernels:
/// U_bar = int_0^L L(L,xi) alpha + N(L,xi) beta dxi - R alpha(L).
double continuous_control_target(const RiemannField & target, const InverseKernelSet & kernels,
                                 const LinearizedSystem & sys);

/// Physical outlet flow perturbation U [veh/s] for a normalized input.
double physical_control(double u_bar, const LinearizedSystem & sys);
double normalized_control(double u_physical, const LinearizedSystem & sys);

/// Lyapunov functional on the target state (trapezoid on the state's grid).
double lyapunov_V(const RiemannField & target, const EtcParams & p, const LinearizedSystem & sys);

/// Min and max over the grid of the Lyapunov weight functions.
Eigen::Vector2d lyapunov_weight_bounds(const EtcParams & p, const LinearizedSystem & sys,
                                       int n_cells);

inline double deviation(double held, double current) { return held - current; }

/// Deviation written as one integral of state differences between the last
/// event (target_k) and now.
double deviation_integral_form(const RiemannField & target_k, const RiemannField & target_now,
                               const InverseKernelSet & kernels, const LinearizedSystem & sys);

double boundary_gain(const EtcParams & p, const LinearizedSystem & sys);

/// Right-hand side of the ETM internal state equation.
double m_rhs(double m, double d, double V, const Eigen::Vector3d & alpha_at_L, double beta_at_0,
             const EtcParams & p, const LinearizedSystem & sys);

/// Event condition: zeta B e^{mu L/Lambda-} d^2 >= zeta mu sigma V - m.
bool should_trigger(double d, double V, double m, const EtcParams & p,
                    const LinearizedSystem & sys);

/// Derived bounds and the dwell-time / stability inequalities with margins.
/// Failures are reported, never thrown.
ValidationReport validate_params(const EtcParams & p, const LinearizedSystem & sys,
                                 const KernelSet & direct, const InverseKernelSet & inverse);

/// tau* = int_0^1 ds / (a s^2 + b s + c). Throws DomainError for non-finite
/// coefficients or a denominator that is not positive on [0, 1].
double min_dwell_time(double a, double b, double c);
double min_dwell_time(const EtcDerivedConstants & dc);

struct TriggerState
{
  double m = 0.0;
  double held_control = 0.0;
  double last_trigger_time = 0.0;
  double deviation = 0.0;
  int trigger_count = 0;
  bool started = false;
};

/// Quantities sampled from the state at the beginning of a step.
struct SampledSignals
{
  double t = 0.0;
  double u_bar = 0.0;
  double V = 0.0;
  Eigen::Vector3d alpha_at_L = Eigen::Vector3d::Zero();
  double beta_at_0 = 0.0;
};

struct ControlSample
{
  double t = 0.0;
  double u_bar_continuous = 0.0;
  double u_bar_applied = 0.0;
  double u_physical = 0.0;
  double d = 0.0;
  double m = 0.0;   ///< ETM state at t, before the step
  double V = 0.0;
  bool triggered = false;
};

/// Supervises the dynamic ETM over [t, t + dt) with the plant frozen at its
/// sample. m is integrated by forward Euler on substeps short enough that
/// delta (eta + 1/zeta) <= 1/2, and the event condition is tested on every
/// substep. At most one event per call; the first call always fires (t_0).
/// Returns true when an event fired; the new input is state.held_control.
bool supervise_etm(TriggerState & state, const SampledSignals & signals, double dt,
                   const EtcParams & p, const LinearizedSystem & sys);

/// Number of forward-Euler substeps supervise_etm uses for a step of dt.
int etm_substeps(double dt, const EtcParams & p);

}  // namespace arzetc

#endif  // ARZETC_CONTROLLER_HPP_
