#include "arzetc/controller.hpp"

#include "arzetc/errors.hpp"
#include "arzetc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace arzetc
{

namespace
{

double grid_spacing(const RiemannField & field, const LinearizedSystem & sys)
{
  if (field.cols() < 2) {
    throw NumericalError("field needs at least two grid nodes");
  }
  return sys.length / static_cast<double>(field.cols() - 1);
}

// Row of a triangular field at x = L as a function of xi.
Eigen::VectorXd outlet_trace(const TriangularField & f)
{
  return f.row_trace(f.grid().n_cells());
}

Eigen::VectorXd derivative(const Eigen::VectorXd & v, double h)
{
  const Eigen::Index n = v.size();
  Eigen::VectorXd d(n);
  if (n < 2) {
    return Eigen::VectorXd::Zero(n);
  }
  d(0) = (v(1) - v(0)) / h;
  d(n - 1) = (v(n - 1) - v(n - 2)) / h;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    d(i) = (v(i + 1) - v(i - 1)) / (2.0 * h);
  }
  return d;
}

InequalityCheck at_least(std::string name, double lhs, double rhs)
{
  return {std::move(name), lhs, ">=", rhs, lhs - rhs, lhs >= rhs};
}

InequalityCheck at_most(std::string name, double lhs, double rhs)
{
  return {std::move(name), lhs, "<=", rhs, rhs - lhs, lhs <= rhs};
}

InequalityCheck greater(std::string name, double lhs, double rhs)
{
  return {std::move(name), lhs, ">", rhs, lhs - rhs, lhs > rhs};
}

InequalityCheck less(std::string name, double lhs, double rhs)
{
  return {std::move(name), lhs, "<", rhs, rhs - lhs, lhs < rhs};
}

}  // namespace

void EtcParams::validate() const
{
  const auto require = [](bool ok, const char * what) {
    if (!ok) {
      throw DomainError(what);
    }
  };
  require(zeta > 0.0, "etc.zeta must be > 0");
  require(sigma > 0.0, "etc.sigma must be > 0");
  require(mu > 0.0, "etc.mu must be > 0");
  require(eta > 0.0 && eta <= 1.0, "etc.eta must lie in (0, 1]");
  require((A.array() > 0.0).all(), "etc.A entries must be > 0");
  require(B > 0.0, "etc.B must be > 0");
  require((varsigma.array() > 0.0).all(), "etc.varsigma entries must be > 0");
  require(m0 <= 0.0, "etc.m0 must be <= 0");
}

bool ValidationReport::all_pass() const
{
  return std::all_of(checks.begin(), checks.end(), [](const auto & c) { return c.pass; });
}

std::string ValidationReport::to_table() const
{
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-56s %14s %3s %14s %14s  %s\n", "inequality", "lhs", "",
                "rhs", "margin", "status");
  out += line;
  for (const auto & c : checks) {
    std::snprintf(line, sizeof(line), "%-56s %14.6e %3s %14.6e %14.6e  %s\n", c.name.c_str(),
                  c.lhs, c.relation.c_str(), c.rhs, c.margin, c.pass ? "PASS" : "FAIL");
    out += line;
  }
  const auto & k = constants;
  std::snprintf(line, sizeof(line),
                "gamma = %.6e  decay_rate = mu(1-sigma)-gamma = %.6e  tau* = %.6e s\n",
                k.gamma_rate, k.decay_rate, k.tau_star);
  out += line;
  std::snprintf(line, sizeof(line), "p1 = %.6e  p2 = %.6e  p3 = %.6e  p4 = %.6e\n", k.p1, k.p2,
                k.p3, k.p4);
  out += line;
  std::snprintf(line, sizeof(line), "phi1 = %.6e  phi2 = %.6e  c1 = %.6e  c2 = %.6e\n", k.phi1,
                k.phi2, k.c1, k.c2);
  out += line;
  for (int i = 0; i < 3; ++i) {
    std::snprintf(line, sizeof(line),
                  "eps_%d = %.6e (8 l^2 lambda^2, used)  %.6e (8 l^2 lambda)\n", i + 1, k.eps(i),
                  k.eps_first_power(i));
    out += line;
  }
  std::snprintf(line, sizeof(line), "dwell bound: a = %.6e  b = %.6e  c = %.6e\n", k.dwell_a,
                k.dwell_b, k.dwell_c);
  out += line;
  out += std::string("stability certificate: ") + (certificate() ? "yes" : "no") + "\n";
  return out;
}

double continuous_control(const RiemannField & w, const KernelSet & kernels,
                          const LinearizedSystem & sys)
{
  const int n = kernels.grid.n_cells();
  if (w.cols() != n + 1) {
    throw NumericalError("continuous_control: state and kernel grids differ");
  }
  const double h = kernels.grid.spacing();
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double v = kernels.k_at(n, j) * w.col(j).head<3>() + kernels.m(n, j) * w(3, j);
    acc += (j == 0 || j == n) ? 0.5 * v : v;
  }
  return h * acc - sys.R * w.col(n).head<3>();
}

double continuous_control_target(const RiemannField & target, const InverseKernelSet & kernels,
                                 const LinearizedSystem & sys)
{
  const int n = kernels.grid.n_cells();
  if (target.cols() != n + 1) {
    throw NumericalError("continuous_control_target: state and kernel grids differ");
  }
  const double h = kernels.grid.spacing();
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double v = kernels.l_at(n, j) * target.col(j).head<3>() + kernels.n(n, j) * target(3, j);
    acc += (j == 0 || j == n) ? 0.5 * v : v;
  }
  return h * acc - sys.R * target.col(n).head<3>();
}

double physical_control(double u_bar, const LinearizedSystem & sys)
{
  if (std::abs(sys.kappa) < 1e-12) {
    throw RegimeError("physical_control: degenerate eigenvector normalization (kappa = 0)");
  }
  return sys.kappa * u_bar / sys.exp_factor;
}

double normalized_control(double u_physical, const LinearizedSystem & sys)
{
  if (std::abs(sys.kappa) < 1e-12) {
    throw RegimeError("normalized_control: degenerate eigenvector normalization (kappa = 0)");
  }
  return sys.exp_factor * u_physical / sys.kappa;
}

double lyapunov_V(const RiemannField & target, const EtcParams & p, const LinearizedSystem & sys)
{
  const double lm = sys.lambda_minus();
  if (!(lm > 0.0)) {
    throw RegimeError("lyapunov_V: requires Lambda- > 0");
  }
  const double h = grid_spacing(target, sys);
  Eigen::VectorXd density(target.cols());
  for (Eigen::Index j = 0; j < target.cols(); ++j) {
    const double x = j * h;
    double v = p.B / lm * std::exp(p.mu * x / lm) * target(3, j) * target(3, j);
    for (int i = 0; i < 3; ++i) {
      const double li = sys.lambda(i);
      v += p.A(i) / li * std::exp(-p.mu * x / li) * target(i, j) * target(i, j);
    }
    density(j) = v;
  }
  return trapezoid(density, h);
}

Eigen::Vector2d lyapunov_weight_bounds(const EtcParams & p, const LinearizedSystem & sys,
                                       int n_cells)
{
  const double lm = sys.lambda_minus();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  const Eigen::VectorXd x = uniform_grid(sys.length, n_cells);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double wb = p.B / lm * std::exp(p.mu * x(j) / lm);
    lo = std::min(lo, wb);
    hi = std::max(hi, wb);
    for (int i = 0; i < 3; ++i) {
      const double wi = p.A(i) / sys.lambda(i) * std::exp(-p.mu * x(j) / sys.lambda(i));
      lo = std::min(lo, wi);
      hi = std::max(hi, wi);
    }
  }
  return {lo, hi};
}

double deviation_integral_form(const RiemannField & target_k, const RiemannField & target_now,
                               const InverseKernelSet & kernels, const LinearizedSystem & sys)
{
  const int n = kernels.grid.n_cells();
  if (target_k.cols() != n + 1 || target_now.cols() != n + 1) {
    throw NumericalError("deviation_integral_form: state and kernel grids differ");
  }
  const double h = kernels.grid.spacing();
  const RiemannField diff = target_k - target_now;
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double v = kernels.l_at(n, j) * diff.col(j).head<3>() + kernels.n(n, j) * diff(3, j);
    acc += (j == 0 || j == n) ? 0.5 * v : v;
  }
  return -sys.R * diff.col(n).head<3>() + h * acc;
}

double boundary_gain(const EtcParams & p, const LinearizedSystem & sys)
{
  return p.B * std::exp(p.mu * sys.length / sys.lambda_minus());
}

double m_rhs(double m, double d, double V, const Eigen::Vector3d & alpha_at_L, double beta_at_0,
             const EtcParams & p, const LinearizedSystem & sys)
{
  return -p.eta * m + boundary_gain(p, sys) * d * d - p.sigma * p.mu * V -
         p.varsigma.head<3>().dot(alpha_at_L.cwiseAbs2()) -
         p.varsigma(3) * beta_at_0 * beta_at_0;
}

bool should_trigger(double d, double V, double m, const EtcParams & p,
                    const LinearizedSystem & sys)
{
  return p.zeta * boundary_gain(p, sys) * d * d >= p.zeta * p.mu * p.sigma * V - m;
}

double min_dwell_time(double a, double b, double c)
{
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw DomainError("min_dwell_time: non-finite bound coefficients");
  }
  // The quadratic's minimum over [0, 1] is at an endpoint or at the vertex.
  double lowest = std::min(c, a + b + c);
  if (a > 0.0) {
    const double vertex = -b / (2.0 * a);
    if (vertex > 0.0 && vertex < 1.0) {
      lowest = std::min(lowest, c - b * b / (4.0 * a));
    }
  }
  if (!(lowest > 0.0)) {
    throw DomainError("min_dwell_time: bound denominator is not positive on [0, 1]");
  }
  const double scale = 1.0 / std::max({std::abs(a), std::abs(b), std::abs(c)});
  return adaptive_simpson([&](double s) { return 1.0 / (a * s * s + b * s + c); }, 0.0, 1.0,
                          1e-14 * scale);
}

double min_dwell_time(const EtcDerivedConstants & dc)
{
  return min_dwell_time(dc.dwell_a, dc.dwell_b, dc.dwell_c);
}

ValidationReport validate_params(const EtcParams & p, const LinearizedSystem & sys,
                                 const KernelSet & direct, const InverseKernelSet & inverse)
{
  p.validate();
  ValidationReport report;
  auto & k = report.constants;
  const int n = inverse.grid.n_cells();
  const double h = inverse.grid.spacing();
  const double L = sys.length;
  const double lm = sys.lambda_minus();
  const Eigen::Vector3d lp = sys.lambda_plus();
  const double zeta = p.zeta;
  const double mu = p.mu;
  const double sigma = p.sigma;

  k.boundary_gain = boundary_gain(p, sys);
  k.theta_direct = operator_norm(direct);
  k.theta_inverse = operator_norm(inverse);
  k.p1 = 1.0 / ((1.0 + k.theta_inverse) * (1.0 + k.theta_inverse));
  k.p2 = (1.0 + k.theta_direct) * (1.0 + k.theta_direct);
  const Eigen::Vector2d weights = lyapunov_weight_bounds(p, sys, n);
  k.p3 = weights(0);
  k.p4 = weights(1);

  for (int i = 0; i < 3; ++i) {
    const double l2 = inverse.l_LL(i) * inverse.l_LL(i);
    k.eps(i) = 8.0 * l2 * lp(i) * lp(i);
    k.eps_first_power(i) = 8.0 * l2 * lp(i);
  }
  k.phi1 = 8.0 * inverse.n_LL * inverse.n_LL * lm * lm;

  const Eigen::VectorXd x = inverse.grid.nodes();
  Eigen::VectorXd dl_sq = Eigen::VectorXd::Zero(n + 1);
  for (int c = 0; c < 3; ++c) {
    dl_sq += (derivative(outlet_trace(inverse.l[c]), h) * lp(c)).cwiseAbs2();
  }
  const Eigen::VectorXd dn_sq = (derivative(outlet_trace(inverse.n), h) * lm).cwiseAbs2();
  Eigen::VectorXd lpp_sq(n + 1);
  Eigen::VectorXd lpm_sq(n + 1);
  double sigma_pp_max = 0.0;
  double sigma_pm_max = 0.0;
  for (int j = 0; j <= n; ++j) {
    const Eigen::Matrix4d s = sys.sigma(x(j));
    const Eigen::Matrix3d spp = s.topLeftCorner<3, 3>();
    const Eigen::Vector3d spm = s.topRightCorner<3, 1>();
    const Eigen::RowVector3d lrow = inverse.l_at(n, j);
    lpp_sq(j) = (lrow * spp).squaredNorm();
    const double lpm = lrow * spm;
    lpm_sq(j) = lpm * lpm;
    sigma_pp_max = std::max(sigma_pp_max, Eigen::JacobiSVD<Eigen::Matrix3d>(spp).singularValues()(0));
    sigma_pm_max = std::max(sigma_pm_max, spm.norm());
  }
  k.c1 = std::max(trapezoid(dl_sq, h), trapezoid(dn_sq, h));
  k.c2 = std::max(trapezoid(lpp_sq, h), trapezoid(lpm_sq, h));
  k.phi2 = 8.0 / k.p3 * (k.c1 + k.c2 / k.p1);

  const double a_max = std::max(p.A.maxCoeff(), p.B);
  const double min_speed = std::min(lp.minCoeff(), lm);
  k.gamma_rate = 2.0 * a_max / (k.p3 * min_speed) *
                 (sigma_pp_max + (1.0 + 1.0 / k.p1) * sigma_pm_max);
  k.decay_rate = mu * (1.0 - sigma) - k.gamma_rate;

  // Coefficients of the explicit bound on dPsi/dt.
  const double g = k.boundary_gain;
  k.dwell_a = (-zeta * mu + 0.5) / zeta;
  k.dwell_b = 1.0 + k.phi1 + 1.0 / (2.0 * zeta) + (-zeta * mu * sigma + 0.5) / zeta + p.eta +
              (zeta * mu * sigma * (mu - k.gamma_rate) - 0.5 * mu * sigma) / (zeta * mu * sigma);
  k.dwell_c = (zeta * g * k.phi2 - 0.5 * mu * sigma) / (zeta * mu * sigma) + p.eta + 1.0 +
              k.phi1 + 1.0 / (2.0 * zeta);
  bool dwell_ok = true;
  try {
    k.tau_star = min_dwell_time(k);
  } catch (const DomainError &) {
    k.tau_star = std::numeric_limits<double>::quiet_NaN();
    dwell_ok = false;
  }

  double aq = 0.0;
  for (int i = 0; i < 3; ++i) {
    aq += p.A(i) * sys.Q(i) * sys.Q(i);
  }

  auto & checks = report.checks;
  for (int i = 0; i < 3; ++i) {
    const std::string idx = std::to_string(i + 1);
    checks.push_back(at_least("dwell: varsigma_" + idx + " >= max(zeta g eps, zeta mu eps)",
                              p.varsigma(i), std::max(zeta * g * k.eps(i), zeta * mu * k.eps(i))));
  }
  checks.push_back(at_least("dwell: varsigma_4 >= max(0, -2 zeta mu (sum A q^2 - B))",
                            p.varsigma(3), std::max(0.0, -2.0 * zeta * mu * (aq - p.B))));
  checks.push_back(greater("dwell: tau* > 0", dwell_ok ? k.tau_star : 0.0, 0.0));
  for (int i = 0; i < 3; ++i) {
    const std::string idx = std::to_string(i + 1);
    checks.push_back(at_most("stability: varsigma_" + idx + " - A_" + idx + " e^{-mu L/lambda}",
                             p.varsigma(i) - p.A(i) * std::exp(-mu * L / lp(i)), 0.0));
  }
  checks.push_back(at_most("stability: varsigma_4 + sum A q^2 - B", p.varsigma(3) + aq - p.B, 0.0));
  checks.push_back(at_least("stability: eta - (mu(1-sigma) - gamma)", p.eta - k.decay_rate, 0.0));
  checks.push_back(greater("stability: mu(1-sigma) - gamma", k.decay_rate, 0.0));
  checks.push_back(less("stability: eta < 1", p.eta, 1.0));
  checks.push_back(less("stability: max varsigma_i < 1", p.varsigma.maxCoeff(), 1.0));
  return report;
}

int etm_substeps(double dt, const EtcParams & p)
{
  const double stiffness = p.eta + 1.0 / p.zeta;
  return std::max(1, static_cast<int>(std::ceil(2.0 * dt * stiffness)));
}

bool supervise_etm(TriggerState & state, const SampledSignals & signals, double dt,
                   const EtcParams & p, const LinearizedSystem & sys)
{
  bool fired = false;
  if (!state.started) {
    state.started = true;
    state.held_control = signals.u_bar;
    state.last_trigger_time = signals.t;
    ++state.trigger_count;
    fired = true;
  }
  const int n_sub = etm_substeps(dt, p);
  const double delta = dt / n_sub;
  for (int k = 0; k < n_sub; ++k) {
    double d = deviation(state.held_control, signals.u_bar);
    if (!fired && should_trigger(d, signals.V, state.m, p, sys)) {
      state.held_control = signals.u_bar;
      state.last_trigger_time = signals.t;
      ++state.trigger_count;
      fired = true;
      d = 0.0;
    }
    state.m += delta * m_rhs(state.m, d, signals.V, signals.alpha_at_L, signals.beta_at_0, p, sys);
  }
  state.deviation = deviation(state.held_control, signals.u_bar);
  return fired;
}

}  // namespace arzetc
