#include "arzetc/config.hpp"
#include "arzetc/errors.hpp"
#include "arzetc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <set>

namespace
{

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalError = 2, kValidationFailure = 3 };

arzetc::ScenarioConfig load(const std::string & path, const std::string & out_dir)
{
  arzetc::ScenarioConfig cfg = arzetc::load_config(path);
  if (!out_dir.empty()) {
    cfg.out_dir = out_dir;
  }
  return cfg;
}

// One plant per distinct spacing; modes do not affect kernels or validation.
std::vector<arzetc::RunPlan> one_plan_per_spacing(const arzetc::ScenarioConfig & cfg)
{
  std::vector<arzetc::RunPlan> out;
  std::set<double> seen;
  for (auto & plan : arzetc::make_run_plans(cfg)) {
    if (seen.insert(plan.s_a).second) {
      out.push_back(std::move(plan));
    }
  }
  return out;
}

int cmd_run(const std::string & config, const std::string & out_dir)
{
  const auto cfg = load(config, out_dir);
  const auto runs = arzetc::run_experiment(cfg);
  std::cout << arzetc::summary_text(runs);
  std::cout << "\nwrote " << runs.size() << " run(s) to " << cfg.out_dir << "\n";
  return kOk;
}

int cmd_validate(const std::string & config, bool strict)
{
  const auto cfg = load(config, "");
  bool ok = true;
  for (const auto & plan : one_plan_per_spacing(cfg)) {
    const auto plant = arzetc::make_plant(plan.model, plan.equilibrium, plan.etc, plan.sim.n_x,
                                          plan.kernels);
    const auto report = arzetc::validate_params(plant.etc, plant.sys, plant.direct, plant.inverse);
    std::printf("s_a = %g m: lambda = (%.6g, %.6g, %.6g, %.6g) m/s\n", plan.s_a,
                plant.sys.lambda(0), plant.sys.lambda(1), plant.sys.lambda(2),
                plant.sys.lambda(3));
    std::cout << report.to_table() << "\n";
    ok = ok && report.all_pass();
  }
  if (strict && !ok) {
    std::cerr << "validate --strict: at least one inequality fails\n";
    return kValidationFailure;
  }
  return kOk;
}

int cmd_kernels(const std::string & config, const std::string & out_dir)
{
  const auto cfg = load(config, out_dir);
  for (const auto & plan : one_plan_per_spacing(cfg)) {
    const auto plant = arzetc::make_plant(plan.model, plan.equilibrium, plan.etc, plan.sim.n_x,
                                          plan.kernels);
    char name[64];
    std::snprintf(name, sizeof(name), "kernels_sa%g", plan.s_a);
    const auto dir = std::filesystem::path(cfg.out_dir) / name;
    arzetc::write_kernel_csv(dir, plant.direct, plant.inverse);
    std::printf("s_a = %g m: direct %d sweeps (residual %.3e), inverse %d sweeps (residual %.3e)"
                " -> %s\n",
                plan.s_a, plant.direct.iterations, plant.direct.residual,
                plant.inverse.iterations, plant.inverse.residual, dir.string().c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Event-triggered boundary control of mixed HV/AV traffic"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  bool strict = false;

  auto * run = app.add_subcommand("run", "simulate every mode and spacing, write CSV bundles");
  run->add_option("--config", config, "scenario JSON")->required();
  run->add_option("--out-dir", out_dir, "override out_dir from the config");

  auto * validate = app.add_subcommand("validate", "report the dwell-time and stability margins");
  validate->add_option("--config", config, "scenario JSON")->required();
  validate->add_flag("--strict", strict, "exit with status 3 when an inequality fails");

  auto * kernels = app.add_subcommand("kernels", "solve the kernels and export them as CSV");
  kernels->add_option("--config", config, "scenario JSON")->required();
  kernels->add_option("--out-dir", out_dir, "override out_dir from the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) {
      return cmd_run(config, out_dir);
    }
    if (*validate) {
      return cmd_validate(config, strict);
    }
    return cmd_kernels(config, out_dir);
  } catch (const arzetc::ConfigError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const arzetc::CalibrationError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const arzetc::RegimeError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const arzetc::DomainError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const arzetc::ConvergenceError & e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception & e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  }
}
