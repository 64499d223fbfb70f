#include "arzetc/model.hpp"

#include "arzetc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace arzetc
{

namespace
{

void require(bool ok, const std::string & what)
{
  if (!ok) {
    throw DomainError(what);
  }
}

double occupancy_ratio(VehicleClass cls, double rho_h, double rho_a, const ModelParams & p)
{
  return area_occupancy(rho_h, rho_a, p) / p.of(cls).AO_max;
}

// Q, R, kappa and the source matrix in eigen-coordinates all follow from the
// eigenvector matrix; recomputed whenever the normalization changes.
void finish_riemann_form(LinearizedSystem & sys)
{
  sys.eigvecs_inv = sys.eigvecs.inverse();
  sys.source_hat = sys.eigvecs_inv * sys.source * sys.eigvecs;

  const Eigen::Matrix<double, 3, 4> cv = sys.inlet_constraints * sys.eigvecs;
  const Eigen::Matrix3d cv_plus = cv.leftCols<3>();
  Eigen::FullPivLU<Eigen::Matrix3d> lu(cv_plus);
  if (!lu.isInvertible()) {
    throw RegimeError("inlet boundary conditions do not determine the incoming waves");
  }
  sys.Q = -lu.solve(cv.col(3));

  const Eigen::Vector4d rates = sys.decay_rates();
  const Eigen::RowVector4d flow_v = sys.outlet_flow * sys.eigvecs;
  sys.kappa = flow_v(3);
  if (std::abs(sys.kappa) < 1e-12) {
    throw RegimeError("outlet flow does not act on the upstream wave (kappa = 0)");
  }
  // c z(L) = sum_j (cV)_j exp(rate_j L) w_j(L)
  Eigen::RowVector4d g;
  for (int j = 0; j < 4; ++j) {
    g(j) = flow_v(j) * std::exp(rates(j) * sys.length);
  }
  sys.R = -g.head<3>() / g(3);
  sys.exp_factor = std::exp(-rates(3) * sys.length);
}

}  // namespace

void VehicleClassParams::validate(std::string_view name) const
{
  const std::string prefix(name);
  require(tau > 0.0, prefix + ".tau must be > 0");
  require(gamma > 0.0, prefix + ".gamma must be > 0");
  require(s_gap >= 0.0, prefix + ".s_gap must be >= 0");
  require(V_max > 0.0, prefix + ".V_max must be > 0");
  require(AO_max > 0.0 && AO_max <= 1.0, prefix + ".AO_max must lie in (0, 1]");
}

void RoadParams::validate() const
{
  require(length_L > 0.0, "road.length_L must be > 0");
  require(width_W > 0.0, "road.width_W must be > 0");
  require(veh_width_d > 0.0, "road.veh_width_d must be > 0");
  require(veh_length_l > 0.0, "road.veh_length_l must be > 0");
  require(veh_width_d < width_W, "road.veh_width_d must be smaller than road.width_W");
}

void ModelParams::validate() const
{
  hv.validate("hv");
  av.validate("av");
  road.validate();
}

double ModelParams::impact_area(VehicleClass cls) const
{
  return road.veh_width_d * (road.veh_length_l + of(cls).s_gap);
}

double area_occupancy(double rho_h, double rho_a, const ModelParams & p)
{
  if (!(rho_h >= 0.0) || !(rho_a >= 0.0)) {
    throw DomainError("area_occupancy: densities must be nonnegative");
  }
  return (p.impact_area(VehicleClass::human) * rho_h +
          p.impact_area(VehicleClass::autonomous) * rho_a) / p.road.width_W;
}

SpeedEvaluation equilibrium_speed(VehicleClass cls, double rho_h, double rho_a,
                                  const ModelParams & p)
{
  const double ratio = occupancy_ratio(cls, rho_h, rho_a, p);
  if (ratio > 1.0) {
    return {0.0, true};
  }
  const auto & c = p.of(cls);
  return {c.V_max * (1.0 - std::pow(ratio, c.gamma)), false};
}

Eigen::Vector2d equilibrium_speed_gradient(VehicleClass cls, double rho_h, double rho_a,
                                           const ModelParams & p)
{
  const auto & c = p.of(cls);
  const double ratio = occupancy_ratio(cls, rho_h, rho_a, p);
  if (ratio > 1.0) {
    return Eigen::Vector2d::Zero();
  }
  // dV/dAO = -V gamma ratio^(gamma-1) / AO_max, dAO/drho_j = a_j / W
  const double dv_dao = -c.V_max * c.gamma * std::pow(ratio, c.gamma - 1.0) / c.AO_max;
  return Eigen::Vector2d(p.impact_area(VehicleClass::human),
                         p.impact_area(VehicleClass::autonomous)) *
         (dv_dao / p.road.width_W);
}

FreeFlowSpeeds calibrate_free_params(double rho_h, double rho_a, double v_h_target,
                                     double v_a_target, const ModelParams & base,
                                     double veh_width_d)
{
  ModelParams p = base;
  p.road.veh_width_d = veh_width_d;
  const double ao = area_occupancy(rho_h, rho_a, p);
  if (ao >= p.hv.AO_max || ao >= p.av.AO_max) {
    throw CalibrationError("calibration infeasible: area occupancy " + std::to_string(ao) +
                           " reaches the jam occupancy; choose a smaller vehicle width d");
  }
  const auto free_speed = [ao](double target, const VehicleClassParams & c) {
    return target / (1.0 - std::pow(ao / c.AO_max, c.gamma));
  };
  return {free_speed(v_h_target, p.hv), free_speed(v_a_target, p.av), ao};
}

Equilibrium make_equilibrium(const ModelParams & p, double rho_h, double rho_a)
{
  if (!(rho_h > 0.0) || !(rho_a > 0.0)) {
    throw DomainError("equilibrium densities must be positive");
  }
  const auto vh = equilibrium_speed(VehicleClass::human, rho_h, rho_a, p);
  const auto va = equilibrium_speed(VehicleClass::autonomous, rho_h, rho_a, p);
  if (vh.saturated || va.saturated) {
    throw DomainError("equilibrium densities exceed the jam area occupancy");
  }
  return {rho_h, rho_a, vh.speed, va.speed};
}

Eigen::Vector4d LinearizedSystem::decay_rates() const
{
  return source_hat.diagonal().cwiseQuotient(lambda);
}

Eigen::Matrix4d LinearizedSystem::sigma(double x) const
{
  const Eigen::Vector4d rates = decay_rates();
  Eigen::Matrix4d s;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      s(i, j) = i == j ? 0.0 : source_hat(i, j) * std::exp(-(rates(i) - rates(j)) * x);
    }
  }
  return s;
}

Eigen::Matrix3d LinearizedSystem::sigma_pp(double x) const
{
  return sigma(x).topLeftCorner<3, 3>();
}

Eigen::Vector3d LinearizedSystem::sigma_pm(double x) const
{
  return sigma(x).topRightCorner<3, 1>();
}

Eigen::RowVector3d LinearizedSystem::sigma_mp(double x) const
{
  return sigma(x).bottomLeftCorner<1, 3>();
}

Eigen::Matrix4d LinearizedSystem::transform(double x) const
{
  const Eigen::Vector4d scale = (-decay_rates() * x).array().exp();
  return scale.asDiagonal() * eigvecs_inv;
}

Eigen::Matrix4d LinearizedSystem::transform_inverse(double x) const
{
  const Eigen::Vector4d scale = (decay_rates() * x).array().exp();
  return eigvecs * scale.asDiagonal();
}

LinearizedSystem linearize(const ModelParams & p, const Equilibrium & eq)
{
  p.validate();
  if (!(eq.rho_h > 0.0) || !(eq.rho_a > 0.0)) {
    throw DomainError("linearize: equilibrium densities must be positive");
  }
  for (auto [cls, v] : {std::pair{VehicleClass::human, eq.v_h},
                        std::pair{VehicleClass::autonomous, eq.v_a}}) {
    const double ve = equilibrium_speed(cls, eq.rho_h, eq.rho_a, p).speed;
    if (std::abs(ve - v) > 1e-9 * std::max(1.0, std::abs(ve))) {
      throw DomainError("linearize: equilibrium speed inconsistent with the fundamental diagram");
    }
  }

  const double rh = eq.rho_h;
  const double ra = eq.rho_a;
  const double vh = eq.v_h;
  const double va = eq.v_a;
  const Eigen::Vector2d dh = equilibrium_speed_gradient(VehicleClass::human, rh, ra, p);
  const Eigen::Vector2d da = equilibrium_speed_gradient(VehicleClass::autonomous, rh, ra, p);
  const double tau_h = p.hv.tau;
  const double tau_a = p.av.tau;

  LinearizedSystem sys;
  sys.length = p.road.length_L;
  sys.equilibrium = eq;

  // Quasilinear form of the two-class ARZ model, with
  // (V_e,i)_t = -sum_j dV_e,i/drho_j (rho_j v_j)_x.
  sys.jacobian << vh, rh, 0.0, 0.0,
                  0.0, vh + dh(0) * rh, -dh(1) * (vh - va), dh(1) * ra,
                  0.0, 0.0, va, ra,
                  -da(0) * (va - vh), da(0) * rh, 0.0, va + da(1) * ra;
  sys.source << 0.0, 0.0, 0.0, 0.0,
                dh(0) / tau_h, -1.0 / tau_h, dh(1) / tau_h, 0.0,
                0.0, 0.0, 0.0, 0.0,
                da(0) / tau_a, 0.0, da(1) / tau_a, -1.0 / tau_a;

  Eigen::EigenSolver<Eigen::Matrix4d> solver(sys.jacobian);
  if (solver.info() != Eigen::Success) {
    throw RegimeError("eigendecomposition of the characteristic matrix failed");
  }
  const Eigen::Vector4cd values = solver.eigenvalues();
  const Eigen::Matrix4cd vectors = solver.eigenvectors();
  const double scale = values.cwiseAbs().maxCoeff();
  if (values.imag().cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw RegimeError("linearized system is not hyperbolic (complex characteristic speeds)");
  }

  std::array<int, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values(a).real() < values(b).real(); });
  for (int k = 0; k + 1 < 4; ++k) {
    if (values(order[k + 1]).real() - values(order[k]).real() < 1e-8 * scale) {
      throw RegimeError("linearized system is not strictly hyperbolic (repeated speeds)");
    }
  }
  if (values(order[0]).real() >= 0.0) {
    throw RegimeError("controller assumes congested regime (lambda_4 >= 0)");
  }
  if (values(order[1]).real() <= 0.0) {
    throw RegimeError("expected exactly one upstream characteristic");
  }

  // Positive speeds ascending in slots 0..2, the upstream speed in slot 3.
  const std::array<int, 4> slot{order[1], order[2], order[3], order[0]};
  for (int j = 0; j < 4; ++j) {
    sys.lambda(j) = values(slot[j]).real();
    Eigen::Vector4d v = vectors.col(slot[j]).real();
    v.normalize();
    const double cut = 1e-12 * v.cwiseAbs().maxCoeff();
    for (int i = 0; i < 4; ++i) {
      if (std::abs(v(i)) > cut) {
        if (v(i) < 0.0) {
          v = -v;
        }
        break;
      }
    }
    sys.eigvecs.col(j) = v;
  }

  sys.inlet_constraints << 1.0, 0.0, 0.0, 0.0,
                           0.0, 0.0, 1.0, 0.0,
                           vh, rh, va, ra;
  sys.outlet_flow << vh, rh, va, ra;
  finish_riemann_form(sys);
  return sys;
}

LinearizedSystem with_eigenvector_scaling(const LinearizedSystem & sys,
                                          const Eigen::Vector4d & scale)
{
  LinearizedSystem out = sys;
  out.eigvecs = sys.eigvecs * scale.asDiagonal();
  finish_riemann_form(out);
  return out;
}

Eigen::VectorXd uniform_grid(double length, int n_cells)
{
  if (n_cells < 1) {
    throw DomainError("uniform_grid: need at least one cell");
  }
  return Eigen::VectorXd::LinSpaced(n_cells + 1, 0.0, length);
}

RiemannField riemann_forward(const RiemannField & z, const Eigen::VectorXd & x,
                             const LinearizedSystem & sys)
{
  if (z.cols() != x.size()) {
    throw NumericalError("riemann_forward: field and grid sizes differ");
  }
  RiemannField w(4, z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    w.col(j) = sys.transform(x(j)) * z.col(j);
  }
  return w;
}

RiemannField riemann_inverse(const RiemannField & w, const Eigen::VectorXd & x,
                             const LinearizedSystem & sys)
{
  if (w.cols() != x.size()) {
    throw NumericalError("riemann_inverse: field and grid sizes differ");
  }
  RiemannField z(4, w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    z.col(j) = sys.transform_inverse(x(j)) * w.col(j);
  }
  return z;
}

}  // namespace arzetc
