#include "arzetc/experiment.hpp"

#include "arzetc/errors.hpp"
#include "arzetc/units.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace arzetc
{

namespace fs = std::filesystem;

namespace
{

std::ofstream open_csv(const fs::path & path, const char * header)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << header << '\n';
  return out;
}

template <typename... Ts>
void write_row(std::ostream & out, double first, Ts... rest)
{
  write_number(out, first);
  ((out << ',', write_number(out, static_cast<double>(rest))), ...);
  out << '\n';
}

void write_field(const fs::path & path, const TriangularField & f)
{
  std::ofstream out = open_csv(path, "x,xi,value");
  const TriangularGrid & g = f.grid();
  for (int i = 0; i <= g.n_cells(); ++i) {
    for (int j = 0; j <= i; ++j) {
      write_row(out, g.node(i), g.node(j), f(i, j));
    }
  }
}

std::string fmt(const char * spec, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

void write_number(std::ostream & out, double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_run_csv(const fs::path & dir, const SimResult & result)
{
  fs::create_directories(dir);
  {
    std::ofstream out = open_csv(dir / "fields.csv", "t,x,rho_h,v_h,rho_a,v_a");
    for (const auto & snap : result.snapshots) {
      const auto & f = snap.fields;
      for (Eigen::Index j = 0; j < result.x.size(); ++j) {
        write_row(out, snap.t, result.x(j), units::per_m_to_per_km(f.rho_h(j)),
                  units::mps_to_kmh(f.v_h(j)), units::per_m_to_per_km(f.rho_a(j)),
                  units::mps_to_kmh(f.v_a(j)));
      }
    }
  }
  {
    std::ofstream out = open_csv(dir / "norms.csv", "t,l2_w,V,V_d");
    for (const auto & s : result.norms) {
      write_row(out, s.t, s.l2_w, s.V, s.V_d);
    }
  }
  if (result.mode == Mode::open_loop) {
    return;
  }
  {
    std::ofstream out =
      open_csv(dir / "control.csv", "t,u_bar_continuous,u_bar_applied,u_physical,d,m,V");
    for (const auto & c : result.control) {
      write_row(out, c.t, c.u_bar_continuous, c.u_bar_applied,
                units::per_s_to_per_h(c.u_physical), c.d, c.m, c.V);
    }
  }
  {
    std::ofstream out = open_csv(dir / "triggers.csv", "k,t_k,interval");
    for (const auto & e : result.triggers) {
      out << e.k << ',';
      write_number(out, e.t);
      out << ',';
      write_number(out, e.interval);
      out << '\n';
    }
  }
}

void write_kernel_csv(const fs::path & dir, const KernelSet & direct,
                      const InverseKernelSet & inverse)
{
  fs::create_directories(dir);
  for (int c = 0; c < 3; ++c) {
    write_field(dir / ("K" + std::to_string(c + 1) + ".csv"), direct.k[c]);
    write_field(dir / ("L" + std::to_string(c + 1) + ".csv"), inverse.l[c]);
  }
  write_field(dir / "M.csv", direct.m);
  write_field(dir / "N.csv", inverse.n);
}

std::string summary_text(const std::vector<RunSummary> & runs)
{
  std::ostringstream out;
  out << "run_id                                  mode             s_a[m]  steps  triggers"
         "  min_int[s]  decay_ratio  fitted_rate  cert_rate\n";
  for (const auto & r : runs) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-39s %-16s %6.2f %6d %9d %11.4g %12.4e %12.4e %10.4e\n",
                  r.run_id.c_str(), to_string(r.mode).c_str(), r.s_a, r.metrics.step_count,
                  r.metrics.trigger_count, r.metrics.min_interval, r.metrics.decay_ratio,
                  r.metrics.fitted_decay_rate, r.metrics.certificate_rate);
    out << line;
  }

  std::vector<const RunSummary *> etc;
  for (const auto & r : runs) {
    if (r.mode == Mode::event_triggered) {
      etc.push_back(&r);
    }
  }
  if (etc.size() >= 2) {
    const RunSummary * most = etc.front();
    for (const auto * r : etc) {
      if (r->metrics.trigger_count > most->metrics.trigger_count) {
        most = r;
      }
    }
    out << "\nspacing comparison (event-triggered):\n";
    for (const auto * r : etc) {
      out << "  s_a = " << fmt("%g", r->s_a) << " m: " << r->metrics.trigger_count
          << " events in " << r->metrics.step_count << " steps\n";
    }
    out << "  most events at s_a = " << fmt("%g", most->s_a) << " m\n";
  }

  for (const auto & r : runs) {
    if (r.mode == Mode::open_loop) {
      continue;
    }
    out << "\nparameter validation for s_a = " << fmt("%g", r.s_a) << " m ("
        << (r.validation.certificate() ? "certificate holds" : "no certificate") << ")\n";
    out << r.validation.to_table();
    break;
  }
  return out.str();
}

std::vector<RunSummary> run_experiment(const ScenarioConfig & cfg)
{
  const std::vector<RunPlan> plans = make_run_plans(cfg);
  const fs::path root(cfg.out_dir);
  fs::create_directories(root);

  std::vector<RunSummary> runs;
  std::map<double, Plant> plants;
  std::map<double, ValidationReport> reports;
  for (const auto & plan : plans) {
    auto it = plants.find(plan.s_a);
    if (it == plants.end()) {
      it = plants.emplace(plan.s_a, make_plant(plan.model, plan.equilibrium, plan.etc,
                                               plan.sim.n_x, plan.kernels)).first;
      reports.emplace(plan.s_a, validate_params(it->second.etc, it->second.sys,
                                                it->second.direct, it->second.inverse));
    }
    const Plant & plant = it->second;

    SimResult result;
    try {
      result = run_closed_loop(plan.sim, plant);
    } catch (const NumericalError & e) {
      throw NumericalError("run " + plan.run_id + ": " + e.what());
    }
    write_run_csv(root / plan.run_id, result);

    RunSummary s;
    s.run_id = plan.run_id;
    s.config_hash = content_hash(plan.canonical);
    s.s_a = plan.s_a;
    s.mode = plan.mode;
    s.n_x = plan.sim.n_x;
    s.dt = result.dt;
    s.lambda = plant.sys.lambda;
    s.metrics = metrics(result, plant);
    s.validation = reports.at(plan.s_a);
    runs.push_back(std::move(s));
  }

  std::ofstream out(root / "summary.txt");
  out << summary_text(runs);
  return runs;
}

}  // namespace arzetc
