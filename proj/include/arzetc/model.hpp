#ifndef ARZETC_MODEL_HPP_
#define ARZETC_MODEL_HPP_

#include <Eigen/Dense>

#include <string_view>

namespace arzetc
{

enum class VehicleClass { human, autonomous };

/// Fundamental-diagram constants of one vehicle class (SI units).
struct VehicleClassParams
{
  double tau = 1.0;     ///< relaxation time [s]
  double gamma = 1.0;   ///< traffic pressure exponent
  double s_gap = 0.0;   ///< car-following gap [m]
  double V_max = 1.0;   ///< free-flow speed [m/s]
  double AO_max = 1.0;  ///< jam area occupancy

  void validate(std::string_view name) const;
  bool operator==(const VehicleClassParams &) const = default;
};

/// Road and vehicle geometry shared by both classes [m].
struct RoadParams
{
  double length_L = 1000.0;
  double width_W = 6.0;
  double veh_width_d = 1.2;
  double veh_length_l = 5.0;

  void validate() const;
  bool operator==(const RoadParams &) const = default;
};

struct ModelParams
{
  VehicleClassParams hv;
  VehicleClassParams av;
  RoadParams road;

  const VehicleClassParams & of(VehicleClass cls) const
  {
    return cls == VehicleClass::human ? hv : av;
  }
  /// Impact area a_i = d (l + s_i) [m^2].
  double impact_area(VehicleClass cls) const;

  void validate() const;
  bool operator==(const ModelParams &) const = default;
};

/// Uniform steady state; densities in veh/m, speeds in m/s.
struct Equilibrium
{
  double rho_h = 0.0;
  double rho_a = 0.0;
  double v_h = 0.0;
  double v_a = 0.0;

  double q_h() const { return rho_h * v_h; }
  double q_a() const { return rho_a * v_a; }
  bool operator==(const Equilibrium &) const = default;
};

struct SpeedEvaluation
{
  double speed = 0.0;
  bool saturated = false;  ///< AO exceeded the class jam occupancy; speed clamped to 0
};

struct FreeFlowSpeeds
{
  double V_h = 0.0;
  double V_a = 0.0;
  double area_occupancy = 0.0;
};

double area_occupancy(double rho_h, double rho_a, const ModelParams & p);

SpeedEvaluation equilibrium_speed(VehicleClass cls, double rho_h, double rho_a,
                                  const ModelParams & p);

/// (dV_e/drho_h, dV_e/drho_a) of the fundamental diagram of one class.
Eigen::Vector2d equilibrium_speed_gradient(VehicleClass cls, double rho_h, double rho_a,
                                           const ModelParams & p);

/// Free-flow speeds that make the fundamental diagram pass exactly through the
/// target speeds at the target densities. V_max fields of `base` are ignored.
FreeFlowSpeeds calibrate_free_params(double rho_h, double rho_a, double v_h_target,
                                     double v_a_target, const ModelParams & base,
                                     double veh_width_d);

/// Equilibrium speeds from the fundamental diagram at the given densities.
Equilibrium make_equilibrium(const ModelParams & p, double rho_h, double rho_a);

/// Riemann-coordinate description of the linearized two-class system.
///
/// State ordering is z = (rho_h, v_h, rho_a, v_a) deviations. The characteristic
/// speeds are ordered so that lambda(0) < lambda(1) < lambda(2) are the positive
/// (downstream) waves and lambda(3) < 0 is the single upstream wave.
struct LinearizedSystem
{
  double length = 0.0;
  Equilibrium equilibrium;

  Eigen::Matrix4d jacobian;     ///< J_lambda in z_t + J_lambda z_x = J z
  Eigen::Matrix4d source;       ///< J
  Eigen::Vector4d lambda;       ///< characteristic speeds [m/s]
  Eigen::Matrix4d eigvecs;      ///< columns are right eigenvectors
  Eigen::Matrix4d eigvecs_inv;
  Eigen::Matrix4d source_hat;   ///< eigvecs_inv * source * eigvecs

  Eigen::Matrix<double, 3, 4> inlet_constraints;  ///< C z(0) = 0
  Eigen::RowVector4d outlet_flow;                 ///< c z(L) = U (total flow perturbation)

  Eigen::Vector3d Q;       ///< w+(0) = Q w-(0)
  Eigen::RowVector3d R;    ///< w-(L) = R w+(L) + U_bar
  double kappa = 0.0;
  double exp_factor = 1.0; ///< exp(-(Jhat_44 / lambda_4) L)

  Eigen::Vector3d lambda_plus() const { return lambda.head<3>(); }
  double lambda_minus() const { return -lambda(3); }
  double max_speed() const { return lambda.cwiseAbs().maxCoeff(); }

  /// Jhat_ii / lambda_i; the Riemann variables are w_i = exp(-rate_i x) zhat_i.
  Eigen::Vector4d decay_rates() const;

  Eigen::Matrix3d sigma_pp(double x) const;
  Eigen::Vector3d sigma_pm(double x) const;
  Eigen::RowVector3d sigma_mp(double x) const;
  /// Full 4x4 coupling matrix (zero diagonal).
  Eigen::Matrix4d sigma(double x) const;

  Eigen::Matrix4d transform(double x) const;
  Eigen::Matrix4d transform_inverse(double x) const;
};

/// Linearize at a congested equilibrium. Throws RegimeError when the system is
/// not strictly hyperbolic or not congested (lambda_4 >= 0).
LinearizedSystem linearize(const ModelParams & p, const Equilibrium & eq);

/// Same system with eigenvector column j multiplied by scale(j). Closed-loop
/// physical quantities do not depend on this choice.
LinearizedSystem with_eigenvector_scaling(const LinearizedSystem & sys,
                                          const Eigen::Vector4d & scale);

/// Four fields sampled on a common x-grid; column j is the state at x_j.
using RiemannField = Eigen::Matrix<double, 4, Eigen::Dynamic>;

/// Uniform nodes 0, h, ..., L with h = L / n_cells.
Eigen::VectorXd uniform_grid(double length, int n_cells);

RiemannField riemann_forward(const RiemannField & z, const Eigen::VectorXd & x,
                             const LinearizedSystem & sys);
RiemannField riemann_inverse(const RiemannField & w, const Eigen::VectorXd & x,
                             const LinearizedSystem & sys);

}  // namespace arzetc

#endif  // ARZETC_MODEL_HPP_
