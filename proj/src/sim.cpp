#include "arzetc/sim.hpp"

#include "arzetc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace arzetc
{

std::string to_string(Mode mode)
{
  switch (mode) {
    case Mode::open_loop:
      return "open_loop";
    case Mode::continuous:
      return "continuous";
    case Mode::event_triggered:
      return "event_triggered";
  }
  return "unknown";
}

Mode mode_from_string(const std::string & name)
{
  if (name == "open_loop") {
    return Mode::open_loop;
  }
  if (name == "continuous") {
    return Mode::continuous;
  }
  if (name == "event_triggered") {
    return Mode::event_triggered;
  }
  throw DomainError("unknown mode '" + name + "'");
}

void SimConfig::validate() const
{
  if (n_x < 16) {
    throw DomainError("sim.n_x must be >= 16");
  }
  if (!(cfl > 0.0 && cfl <= 1.0)) {
    throw DomainError("sim.cfl must lie in (0, 1]");
  }
  if (!(t_end > 0.0)) {
    throw DomainError("sim.t_end must be > 0");
  }
  if (output_stride < 1) {
    throw DomainError("sim.output_stride must be >= 1");
  }
  if (initial.wavenumber < 0) {
    throw DomainError("sim.wavenumber must be >= 0");
  }
  if (std::abs(initial.amp_rho) > 1.0 || std::abs(initial.amp_v) > 1.0) {
    throw DomainError("initial amplitudes above 1 produce negative densities or speeds");
  }
}

Plant make_plant(const ModelParams & model, const Equilibrium & eq, const EtcParams & etc,
                 int n_cells, const KernelSolverOptions & opts)
{
  etc.validate();
  Plant plant{model, linearize(model, eq), {}, {}, etc};
  const TriangularGrid grid(plant.sys.length, n_cells);
  plant.direct = solve_direct_kernels(plant.sys, grid, opts);
  plant.inverse = solve_inverse_kernels(plant.sys, grid, opts);
  return plant;
}

UpwindScheme::UpwindScheme(const LinearizedSystem & sys, int n_x)
: sys_(sys), n_x_(n_x), dx_(sys.length / n_x), x_(uniform_grid(sys.length, n_x)), sigma_(n_x + 1)
{
  for (int j = 0; j <= n_x; ++j) {
    sigma_[j] = sys.sigma(x_(j));
  }
}

SimState UpwindScheme::advance(const SimState & state, double u_bar, double dt,
                               const RiemannField * forcing) const
{
  const int n = n_x_;
  if (state.w.cols() != n + 1) {
    throw NumericalError("step: state has the wrong number of nodes");
  }
  const double courant = dt * sys_.max_speed() / dx_;
  if (!(dt > 0.0) || courant > 1.0 + 1e-12) {
    throw NumericalError("step: CFL condition violated (Courant number " +
                         std::to_string(courant) + ")");
  }
  const RiemannField & w = state.w;
  SimState next{state.t + dt, dx_, RiemannField(4, n + 1)};
  RiemannField & wn = next.w;

  for (int c = 0; c < 3; ++c) {
    const double nu = sys_.lambda(c) * dt / dx_;
    for (int j = 1; j <= n; ++j) {
      double rhs = sigma_[j].row(c).dot(w.col(j));
      if (forcing) {
        rhs += (*forcing)(c, j);
      }
      wn(c, j) = w(c, j) - nu * (w(c, j) - w(c, j - 1)) + dt * rhs;
    }
  }
  const double nu_minus = sys_.lambda_minus() * dt / dx_;
  for (int j = 0; j < n; ++j) {
    double rhs = sigma_[j].row(3).dot(w.col(j));
    if (forcing) {
      rhs += (*forcing)(3, j);
    }
    wn(3, j) = w(3, j) + nu_minus * (w(3, j + 1) - w(3, j)) + dt * rhs;
  }
  wn(3, n) = sys_.R * wn.col(n).head<3>() + u_bar;
  wn.col(0).head<3>() = sys_.Q * wn(3, 0);
  if (!wn.allFinite()) {
    throw NumericalError("step: non-finite state");
  }
  return next;
}

SimState init_state(const SimConfig & cfg, const LinearizedSystem & sys)
{
  cfg.validate();
  const Eigen::VectorXd x = uniform_grid(sys.length, cfg.n_x);
  const auto & eq = sys.equilibrium;
  const Eigen::ArrayXd shape =
    (2.0 * std::numbers::pi * cfg.initial.wavenumber / sys.length * x.array()).sin();
  RiemannField z(4, x.size());
  z.row(0) = (cfg.initial.amp_rho * eq.rho_h * shape).matrix().transpose();
  z.row(1) = (cfg.initial.amp_v * eq.v_h * shape).matrix().transpose();
  z.row(2) = (cfg.initial.amp_rho * eq.rho_a * shape).matrix().transpose();
  z.row(3) = (cfg.initial.amp_v * eq.v_a * shape).matrix().transpose();

  SimState state{0.0, sys.length / cfg.n_x, riemann_forward(z, x, sys)};
  const int n = cfg.n_x;
  state.w(3, n) = sys.R * state.w.col(n).head<3>();
  state.w.col(0).head<3>() = sys.Q * state.w(3, 0);
  return state;
}

double implicit_boundary_control(const RiemannField & w, const KernelSet & kernels,
                                 const LinearizedSystem & sys)
{
  const Eigen::Index n = w.cols() - 1;
  RiemannField probe = w;
  probe(3, n) = 0.0;
  const double u0 = continuous_control(probe, kernels, sys);
  probe(3, n) = 1.0;
  const double slope = continuous_control(probe, kernels, sys) - u0;
  if (std::abs(1.0 - slope) < 1e-12) {
    throw NumericalError("implicit_boundary_control: singular outlet equation");
  }
  // u = u0 + slope (R w+(L) + u)
  return (u0 + slope * sys.R.dot(w.col(n).head<3>())) / (1.0 - slope);
}

SimState step(const SimState & state, double u_bar, const LinearizedSystem & sys, double dt)
{
  const UpwindScheme scheme(sys, static_cast<int>(state.w.cols()) - 1);
  return scheme.advance(state, u_bar, dt);
}

PhysicalFields reconstruct_physical(const RiemannField & w, const Eigen::VectorXd & x,
                                    const LinearizedSystem & sys)
{
  const RiemannField z = riemann_inverse(w, x, sys);
  const auto & eq = sys.equilibrium;
  PhysicalFields f;
  f.rho_h = (z.row(0).array() + eq.rho_h).matrix().transpose();
  f.v_h = (z.row(1).array() + eq.v_h).matrix().transpose();
  f.rho_a = (z.row(2).array() + eq.rho_a).matrix().transpose();
  f.v_a = (z.row(3).array() + eq.v_a).matrix().transpose();
  return f;
}

SimResult run_closed_loop(const SimConfig & cfg, const Plant & plant)
{
  cfg.validate();
  const auto & sys = plant.sys;
  if (plant.direct.grid.n_cells() != cfg.n_x || plant.inverse.grid.n_cells() != cfg.n_x) {
    throw NumericalError("run_closed_loop: kernel grid does not match sim.n_x");
  }
  const UpwindScheme scheme(sys, cfg.n_x);
  const int steps = static_cast<int>(std::ceil(cfg.t_end / (cfg.cfl * scheme.max_stable_dt())));
  const double dt = cfg.t_end / steps;

  SimResult result;
  result.mode = cfg.mode;
  result.dt = dt;
  result.steps = steps;
  result.x = scheme.x();

  SimState state = init_state(cfg, sys);
  result.w_initial = state.w;
  const double h = scheme.dx();
  const double l2_initial = l2_norm(state.w, h);
  const double blowup_limit = cfg.blowup_factor * std::max(l2_initial, 1e-300);

  TriggerState etm;
  etm.m = plant.etc.m0;
  const int n = cfg.n_x;

  for (int step_index = 0; step_index <= steps; ++step_index) {
    const RiemannField target = transform_forward(state.w, plant.direct);
    const double V = lyapunov_V(target, plant.etc, sys);
    const double l2 = l2_norm(state.w, h);
    const double m_now = cfg.mode == Mode::event_triggered ? etm.m : 0.0;
    result.norms.push_back({state.t, l2, V, V - m_now, target(3, n)});
    if (step_index % cfg.output_stride == 0 || step_index == steps) {
      result.snapshots.push_back({state.t, reconstruct_physical(state.w, result.x, sys)});
    }
    if (l2 > blowup_limit) {
      throw NumericalError("run_closed_loop: state norm " + std::to_string(l2) + " at t = " +
                           std::to_string(state.t) + " exceeds " +
                           std::to_string(cfg.blowup_factor) + " x the initial norm");
    }
    if (step_index == steps) {
      break;
    }

    if (cfg.mode == Mode::open_loop) {
      state = scheme.advance(state, 0.0, dt);
      continue;
    }
    if (cfg.mode == Mode::continuous) {
      state = scheme.advance(state, 0.0, dt);
      const double u_bar = implicit_boundary_control(state.w, plant.direct, sys);
      state.w(3, n) += u_bar;
      ControlSample sample;
      sample.t = state.t;
      sample.u_bar_continuous = sample.u_bar_applied = u_bar;
      sample.u_physical = physical_control(u_bar, sys);
      sample.triggered = true;
      const double previous = result.triggers.empty() ? 0.0 : result.triggers.back().t;
      result.triggers.push_back({static_cast<int>(result.triggers.size()), state.t,
                                 result.triggers.empty() ? 0.0 : state.t - previous});
      result.control.push_back(sample);
      continue;
    }

    const double u_bar = continuous_control_target(target, plant.inverse, sys);
    SampledSignals signals;
    signals.t = state.t;
    signals.u_bar = u_bar;
    signals.V = V;
    signals.alpha_at_L = target.col(n).head<3>();
    signals.beta_at_0 = target(3, 0);
    ControlSample sample;
    sample.t = state.t;
    sample.u_bar_continuous = u_bar;
    sample.V = V;
    sample.m = etm.m;
    sample.triggered = supervise_etm(etm, signals, dt, plant.etc, sys);
    sample.u_bar_applied = etm.held_control;
    sample.d = deviation(etm.held_control, u_bar);
    sample.u_physical = physical_control(etm.held_control, sys);
    if (sample.triggered) {
      const double previous = result.triggers.empty() ? state.t : result.triggers.back().t;
      result.triggers.push_back({static_cast<int>(result.triggers.size()), state.t,
                                 state.t - previous});
    }
    result.control.push_back(sample);
    state = scheme.advance(state, etm.held_control, dt);
  }
  result.w_final = state.w;
  return result;
}

RunMetrics metrics(const SimResult & result, const Plant & plant)
{
  RunMetrics out;
  out.step_count = result.steps;
  out.trigger_count = static_cast<int>(result.triggers.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (result.triggers.size() >= 2) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double sum = 0.0;
    for (std::size_t k = 1; k < result.triggers.size(); ++k) {
      const double iv = result.triggers[k].interval;
      lo = std::min(lo, iv);
      hi = std::max(hi, iv);
      sum += iv;
    }
    out.min_interval = lo;
    out.max_interval = hi;
    out.mean_interval = sum / static_cast<double>(result.triggers.size() - 1);
  } else {
    out.min_interval = out.mean_interval = out.max_interval = nan;
  }

  const double l2_0 = result.norms.empty() ? 0.0 : result.norms.front().l2_w;
  if (l2_0 == 0.0) {
    out.at_equilibrium = true;
    out.decay_ratio = nan;
  } else {
    out.decay_ratio = result.norms.back().l2_w / l2_0;
  }

  // ln V_d = c - rate t by least squares over the positive samples.
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int count = 0;
  for (const auto & s : result.norms) {
    if (s.V_d > 0.0) {
      const double y = std::log(s.V_d);
      st += s.t;
      sy += y;
      stt += s.t * s.t;
      sty += s.t * y;
      ++count;
    }
  }
  const double denom = count * stt - st * st;
  out.fitted_decay_rate = (count >= 2 && denom > 0.0) ? -(count * sty - st * sy) / denom : nan;

  const auto report_rate = [&] {
    const auto report = validate_params(plant.etc, plant.sys, plant.direct, plant.inverse);
    return report.constants.decay_rate;
  };
  out.certificate_rate = report_rate();
  return out;
}

}  // namespace arzetc
