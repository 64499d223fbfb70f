#include "support.hpp"

#include "arzetc/errors.hpp"
#include "arzetc/experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace arzetc;

namespace
{

std::string read_file(const std::filesystem::path & p)
{
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const std::filesystem::path & p)
{
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

ScenarioConfig small_scenario(const std::filesystem::path & out, std::vector<Mode> modes)
{
  ScenarioConfig cfg = paper_s5();
  cfg.sim.n_x = 24;
  cfg.sim.t_end = 40.0;
  cfg.sim.output_stride = 5;
  cfg.modes = std::move(modes);
  cfg.out_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("preset paper_s5 expands to the reference values")
{
  const ScenarioConfig cfg = parse_config(R"({"preset": "paper_s5"})");
  CHECK(cfg == paper_s5());
  CHECK(cfg.equilibrium.rho_h == 150.0);
  CHECK(cfg.equilibrium.rho_a == 75.0);
  CHECK(cfg.hv.tau == 30.0);
  CHECK(cfg.av.tau == 60.0);
  CHECK(cfg.hv.gamma == 2.5);
  CHECK(cfg.av.gamma == 2.0);
  CHECK(cfg.hv.s_gap == 5.0);
  CHECK(cfg.av.s_gap == 16.0);
  CHECK(cfg.hv.AO_max == 0.9);
  CHECK(cfg.av.AO_max == 0.85);
  CHECK(cfg.road.length_L == 1000.0);
  CHECK(cfg.road.width_W == 6.0);
  CHECK(cfg.sim.t_end == 450.0);
  CHECK(cfg.etc.zeta == 8e-3);
  CHECK(cfg.etc.sigma == 1e-4);
  CHECK(cfg.etc.eta == 0.9);
  CHECK(cfg.etc.mu == 5e-4);
  CHECK(cfg.etc.A == Eigen::Vector3d(2e-2, 3e-3, 4e-3));
  CHECK(cfg.etc.B == 9e-3);
  CHECK(cfg.etc.varsigma == Eigen::Vector4d(2e-10, 2e-9, 1.2e-12, 1e-2));
}

TEST_CASE("overrides merge over the preset")
{
  const ScenarioConfig cfg =
    parse_config(R"({"preset": "paper_s5", "sim": {"n_x": 64, "modes": ["open_loop"]},
                     "etc": {"A": [1, 2, 3]}})");
  CHECK(cfg.sim.n_x == 64);
  CHECK(cfg.sim.cfl == 0.8);
  CHECK(cfg.modes == std::vector<Mode>{Mode::open_loop});
  CHECK(cfg.etc.A == Eigen::Vector3d(1, 2, 3));
  CHECK(cfg.etc.B == 9e-3);
}

TEST_CASE("invalid documents are rejected with the key path")
{
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "paper_s5", "model": {"hv": {"tau": -30}}})"),
                       doctest::Contains("model.hv.tau"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "paper_s5", "sim": {"nx": 10}})"),
                       doctest::Contains("sim.nx"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "paper_s5", "sim": {"n_x": 10.5}})"),
                       doctest::Contains("sim.n_x"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "paper_s5", "etc": {"A": [1, 2]}})"),
                       doctest::Contains("etc.A"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "paper_s5", "etc": {"m0": 1}})"),
                       doctest::Contains("etc.m0"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "paper_s5", "sim": {"modes": ["fast"]}})"),
                       doctest::Contains("sim.modes"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"preset": "other"})"), doctest::Contains("preset"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);

  // Without a preset every key is required.
  CHECK_THROWS_WITH_AS(parse_config(R"({"out_dir": "x"})"), doctest::Contains("missing key"),
                       ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("config round trip")
{
  ScenarioConfig cfg = paper_s5();
  CHECK(parse_config(to_json(cfg)) == cfg);
  cfg.etc.varsigma(2) = 3.3e-13;
  cfg.sim.initial.wavenumber = 3;
  cfg.modes = {Mode::event_triggered};
  cfg.sweep_s_a = {};
  cfg.road.veh_width_d = 0.1 + 0.2;
  CHECK(parse_config(to_json(cfg)) == cfg);

  const auto dir = test::scratch_dir("roundtrip");
  std::ofstream(dir / "c.json") << to_json(cfg);
  CHECK(load_config(dir / "c.json") == cfg);
}

TEST_CASE("sweep produces run plans that differ only in the AV spacing")
{
  ScenarioConfig cfg = paper_s5();
  cfg.modes = {Mode::event_triggered};
  const auto plans = make_run_plans(cfg);
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].s_a == 16.0);
  CHECK(plans[1].s_a == 20.0);
  CHECK(plans[0].model.av.s_gap == 16.0);
  CHECK(plans[1].model.av.s_gap == 20.0);
  // Free-flow speeds are derived per plan, everything else is shared.
  CHECK(plans[0].model.hv.tau == plans[1].model.hv.tau);
  CHECK(plans[0].model.hv.gamma == plans[1].model.hv.gamma);
  CHECK(plans[0].model.hv.s_gap == plans[1].model.hv.s_gap);
  CHECK(plans[0].model.hv.AO_max == plans[1].model.hv.AO_max);
  CHECK(plans[0].model.road == plans[1].model.road);
  CHECK(plans[0].model.av.tau == plans[1].model.av.tau);
  CHECK(plans[0].model.av.gamma == plans[1].model.av.gamma);
  CHECK(plans[0].model.av.AO_max == plans[1].model.av.AO_max);
  CHECK(plans[0].etc == plans[1].etc);
  CHECK(plans[0].sim == plans[1].sim);
  // The equilibrium targets are shared; free-flow speeds are calibrated to them.
  CHECK(plans[0].equilibrium.rho_h == plans[1].equilibrium.rho_h);
  CHECK(plans[0].equilibrium.v_h == doctest::Approx(plans[1].equilibrium.v_h).epsilon(1e-12));
  CHECK(plans[0].equilibrium.v_a == doctest::Approx(plans[1].equilibrium.v_a).epsilon(1e-12));
  CHECK(plans[0].run_id != plans[1].run_id);

  cfg.sweep_s_a = {};
  cfg.modes = {Mode::continuous, Mode::event_triggered};
  const auto single = make_run_plans(cfg);
  REQUIRE(single.size() == 2);
  CHECK(single[0].s_a == cfg.av.s_gap);
  CHECK(single[0].mode == Mode::continuous);
}

TEST_CASE("content hash is 64-bit FNV-1a")
{
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == "af63dc4c8601ec8c");
  CHECK(make_run_plans(paper_s5()).front().run_id ==
        make_run_plans(paper_s5()).front().run_id);
}

TEST_CASE("experiment writes deterministic CSV bundles")
{
  const auto dir_a = test::scratch_dir("exp_a");
  const auto dir_b = test::scratch_dir("exp_b");
  const auto runs_a =
    run_experiment(small_scenario(dir_a, {Mode::continuous, Mode::event_triggered}));
  run_experiment(small_scenario(dir_b, {Mode::continuous, Mode::event_triggered}));
  REQUIRE(runs_a.size() == 4);

  for (const auto & r : runs_a) {
    for (const char * f : {"fields.csv", "norms.csv", "control.csv", "triggers.csv"}) {
      const auto pa = dir_a / r.run_id / f;
      REQUIRE(std::filesystem::exists(pa));
      CHECK(read_file(pa) == read_file(dir_b / r.run_id / f));
    }
    CHECK(first_line(dir_a / r.run_id / "fields.csv") == "t,x,rho_h,v_h,rho_a,v_a");
    CHECK(first_line(dir_a / r.run_id / "norms.csv") == "t,l2_w,V,V_d");
    CHECK(first_line(dir_a / r.run_id / "control.csv") ==
          "t,u_bar_continuous,u_bar_applied,u_physical,d,m,V");
    CHECK(first_line(dir_a / r.run_id / "triggers.csv") == "k,t_k,interval");
  }

  // 17 significant digits.
  std::ifstream norms(dir_a / runs_a[0].run_id / "norms.csv");
  std::string line;
  std::getline(norms, line);
  std::getline(norms, line);
  std::getline(norms, line);
  std::istringstream row(line);
  std::string t_field, l2_field;
  std::getline(row, t_field, ',');
  std::getline(row, l2_field, ',');
  const auto mantissa = l2_field.substr(0, l2_field.find('e'));
  CHECK(std::count_if(mantissa.begin(), mantissa.end(),
                      [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) >= 16);

  const std::string summary = read_file(dir_a / "summary.txt");
  CHECK(summary.find("spacing comparison") != std::string::npos);
  CHECK(summary.find("most events at s_a") != std::string::npos);
  CHECK(summary.find("parameter validation") != std::string::npos);
}

TEST_CASE("open loop runs write no controller CSVs")
{
  const auto dir = test::scratch_dir("open_loop");
  ScenarioConfig cfg = small_scenario(dir, {Mode::open_loop});
  cfg.sweep_s_a = {16.0};
  const auto runs = run_experiment(cfg);
  REQUIRE(runs.size() == 1);
  CHECK(std::filesystem::exists(dir / runs[0].run_id / "fields.csv"));
  CHECK(std::filesystem::exists(dir / runs[0].run_id / "norms.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / runs[0].run_id / "control.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / runs[0].run_id / "triggers.csv"));
}

TEST_CASE("kernel export")
{
  const auto dir = test::scratch_dir("kernels");
  const Plant & plant = test::paper_plant(16);
  write_kernel_csv(dir, plant.direct, plant.inverse);
  for (const char * f : {"K1.csv", "K2.csv", "K3.csv", "M.csv", "L1.csv", "L2.csv", "L3.csv",
                         "N.csv"}) {
    REQUIRE(std::filesystem::exists(dir / f));
    CHECK(first_line(dir / f) == "x,xi,value");
  }
  std::ifstream in(dir / "M.csv");
  int rows = -1;
  for (std::string line; std::getline(in, line);) {
    ++rows;
  }
  CHECK(rows == 17 * 18 / 2);
}
