#include "arzetc/config.hpp"

#include "arzetc/errors.hpp"
#include "arzetc/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace arzetc
{

using nlohmann::json;

namespace
{

// Key-path aware accessors. Every object is checked for unknown keys before
// its fields are read, so a typo never silently falls back to a default.
class Section
{
public:
  Section(const json & node, std::string path) : node_(node), path_(std::move(path))
  {
    if (!node_.is_object()) {
      throw ConfigError("'" + display() + "' must be an object");
    }
  }

  void allow_only(std::initializer_list<const char *> keys) const
  {
    for (const auto & item : node_.items()) {
      const bool known = std::any_of(keys.begin(), keys.end(),
                                     [&](const char * k) { return item.key() == k; });
      if (!known) {
        throw ConfigError("unknown key '" + child(item.key()) + "'");
      }
    }
  }

  const json & at(const char * key) const
  {
    const auto it = node_.find(key);
    if (it == node_.end()) {
      throw ConfigError("missing key '" + child(key) + "'");
    }
    return *it;
  }

  Section section(const char * key) const { return Section(at(key), child(key)); }

  double number(const char * key) const
  {
    const json & v = at(key);
    if (!v.is_number()) {
      throw ConfigError("'" + child(key) + "' must be a number");
    }
    return v.get<double>();
  }

  int integer(const char * key) const
  {
    const json & v = at(key);
    if (!v.is_number_integer()) {
      throw ConfigError("'" + child(key) + "' must be an integer");
    }
    return v.get<int>();
  }

  std::string string(const char * key) const
  {
    const json & v = at(key);
    if (!v.is_string()) {
      throw ConfigError("'" + child(key) + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char * key, std::size_t expected = 0) const
  {
    const json & v = at(key);
    if (!v.is_array()) {
      throw ConfigError("'" + child(key) + "' must be an array");
    }
    if (expected != 0 && v.size() != expected) {
      throw ConfigError("'" + child(key) + "' must have " + std::to_string(expected) +
                        " entries");
    }
    std::vector<double> out;
    for (const auto & e : v) {
      if (!e.is_number()) {
        throw ConfigError("'" + child(key) + "' entries must be numbers");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::string child(const std::string & key) const
  {
    return path_.empty() ? key : path_ + "." + key;
  }

private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json & node_;
  std::string path_;
};

void check(bool ok, const std::string & path, const char * rule)
{
  if (!ok) {
    throw ConfigError("'" + path + "' " + rule);
  }
}

ClassConfig read_class(const Section & s)
{
  s.allow_only({"tau", "gamma", "s_gap", "AO_max"});
  ClassConfig c{s.number("tau"), s.number("gamma"), s.number("s_gap"), s.number("AO_max")};
  check(c.tau > 0.0, s.child("tau"), "must be > 0");
  check(c.gamma > 0.0, s.child("gamma"), "must be > 0");
  check(c.s_gap >= 0.0, s.child("s_gap"), "must be >= 0");
  check(c.AO_max > 0.0 && c.AO_max <= 1.0, s.child("AO_max"), "must lie in (0, 1]");
  return c;
}

RoadParams read_road(const Section & s)
{
  s.allow_only({"length_L", "width_W", "veh_width_d", "veh_length_l"});
  RoadParams r{s.number("length_L"), s.number("width_W"), s.number("veh_width_d"),
               s.number("veh_length_l")};
  check(r.length_L > 0.0, s.child("length_L"), "must be > 0");
  check(r.width_W > 0.0, s.child("width_W"), "must be > 0");
  check(r.veh_width_d > 0.0, s.child("veh_width_d"), "must be > 0");
  check(r.veh_length_l > 0.0, s.child("veh_length_l"), "must be > 0");
  check(r.veh_width_d < r.width_W, s.child("veh_width_d"), "must be smaller than width_W");
  return r;
}

EquilibriumTargets read_equilibrium(const Section & s)
{
  s.allow_only({"rho_h_veh_per_km", "rho_a_veh_per_km", "v_h_kmh", "v_a_kmh"});
  EquilibriumTargets e{s.number("rho_h_veh_per_km"), s.number("rho_a_veh_per_km"),
                       s.number("v_h_kmh"), s.number("v_a_kmh")};
  check(e.rho_h > 0.0, s.child("rho_h_veh_per_km"), "must be > 0");
  check(e.rho_a > 0.0, s.child("rho_a_veh_per_km"), "must be > 0");
  check(e.v_h > 0.0, s.child("v_h_kmh"), "must be > 0");
  check(e.v_a > 0.0, s.child("v_a_kmh"), "must be > 0");
  return e;
}

EtcParams read_etc(const Section & s)
{
  s.allow_only({"zeta", "sigma", "eta", "mu", "A", "B", "varsigma", "m0"});
  EtcParams p;
  p.zeta = s.number("zeta");
  p.sigma = s.number("sigma");
  p.eta = s.number("eta");
  p.mu = s.number("mu");
  p.A = Eigen::Map<const Eigen::Vector3d>(s.numbers("A", 3).data());
  p.B = s.number("B");
  p.varsigma = Eigen::Map<const Eigen::Vector4d>(s.numbers("varsigma", 4).data());
  p.m0 = s.number("m0");
  try {
    p.validate();
  } catch (const DomainError & e) {
    throw ConfigError(e.what());
  }
  return p;
}

void read_sim(const Section & s, SimConfig & sim, std::vector<Mode> & modes)
{
  s.allow_only({"n_x", "cfl", "t_end", "modes", "output_stride", "initial"});
  sim.n_x = s.integer("n_x");
  sim.cfl = s.number("cfl");
  sim.t_end = s.number("t_end");
  sim.output_stride = s.integer("output_stride");
  const Section ic = s.section("initial");
  ic.allow_only({"amp_rho", "amp_v", "wavenumber"});
  sim.initial = {ic.number("amp_rho"), ic.number("amp_v"), ic.integer("wavenumber")};

  const json & list = s.at("modes");
  const std::string path = s.child("modes");
  check(list.is_array() && !list.empty(), path, "must be a non-empty array");
  modes.clear();
  for (const auto & m : list) {
    check(m.is_string(), path, "entries must be strings");
    try {
      modes.push_back(mode_from_string(m.get<std::string>()));
    } catch (const DomainError & e) {
      throw ConfigError("'" + path + "': " + e.what());
    }
  }
  std::vector<Mode> sorted = modes;
  std::sort(sorted.begin(), sorted.end());
  check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), path,
        "must not repeat a mode");
  try {
    sim.validate();
  } catch (const DomainError & e) {
    throw ConfigError(e.what());
  }
}

json class_json(const ClassConfig & c)
{
  return {{"tau", c.tau}, {"gamma", c.gamma}, {"s_gap", c.s_gap}, {"AO_max", c.AO_max}};
}

json road_json(const RoadParams & r)
{
  return {{"length_L", r.length_L}, {"width_W", r.width_W}, {"veh_width_d", r.veh_width_d},
          {"veh_length_l", r.veh_length_l}};
}

json etc_json(const EtcParams & p)
{
  return {{"zeta", p.zeta}, {"sigma", p.sigma}, {"eta", p.eta}, {"mu", p.mu},
          {"A", {p.A(0), p.A(1), p.A(2)}}, {"B", p.B},
          {"varsigma", {p.varsigma(0), p.varsigma(1), p.varsigma(2), p.varsigma(3)}},
          {"m0", p.m0}};
}

json sim_json(const SimConfig & sim)
{
  return {{"n_x", sim.n_x}, {"cfl", sim.cfl}, {"t_end", sim.t_end},
          {"output_stride", sim.output_stride},
          {"initial", {{"amp_rho", sim.initial.amp_rho}, {"amp_v", sim.initial.amp_v},
                       {"wavenumber", sim.initial.wavenumber}}}};
}

json kernels_json(const KernelSolverOptions & k)
{
  return {{"tol", k.tol}, {"max_iter", k.max_iter}};
}

json config_json(const ScenarioConfig & cfg)
{
  json modes = json::array();
  for (Mode m : cfg.modes) {
    modes.push_back(to_string(m));
  }
  json sim = sim_json(cfg.sim);
  sim["modes"] = modes;
  return {
    {"model", {{"hv", class_json(cfg.hv)}, {"av", class_json(cfg.av)},
               {"road", road_json(cfg.road)}}},
    {"equilibrium", {{"rho_h_veh_per_km", cfg.equilibrium.rho_h},
                     {"rho_a_veh_per_km", cfg.equilibrium.rho_a},
                     {"v_h_kmh", cfg.equilibrium.v_h},
                     {"v_a_kmh", cfg.equilibrium.v_a}}},
    {"etc", etc_json(cfg.etc)},
    {"sim", sim},
    {"kernels", kernels_json(cfg.kernels)},
    {"sweep_s_a", cfg.sweep_s_a},
    {"out_dir", cfg.out_dir},
  };
}

// Objects merge key by key; anything else in the overlay replaces the base.
void merge_into(json & base, const json & overlay)
{
  for (const auto & item : overlay.items()) {
    auto it = base.find(item.key());
    if (it != base.end() && it->is_object() && item.value().is_object()) {
      merge_into(*it, item.value());
    } else {
      base[item.key()] = item.value();
    }
  }
}

ScenarioConfig from_json(const json & doc)
{
  const Section root(doc, "");
  root.allow_only({"model", "equilibrium", "etc", "sim", "kernels", "sweep_s_a", "out_dir"});
  ScenarioConfig cfg;
  const Section model = root.section("model");
  model.allow_only({"hv", "av", "road"});
  cfg.hv = read_class(model.section("hv"));
  cfg.av = read_class(model.section("av"));
  cfg.road = read_road(model.section("road"));
  cfg.equilibrium = read_equilibrium(root.section("equilibrium"));
  cfg.etc = read_etc(root.section("etc"));
  read_sim(root.section("sim"), cfg.sim, cfg.modes);

  const Section kernels = root.section("kernels");
  kernels.allow_only({"tol", "max_iter"});
  cfg.kernels = {kernels.number("tol"), kernels.integer("max_iter")};
  check(cfg.kernels.tol > 0.0, "kernels.tol", "must be > 0");
  check(cfg.kernels.max_iter >= 1, "kernels.max_iter", "must be >= 1");

  cfg.sweep_s_a = root.numbers("sweep_s_a");
  for (double s : cfg.sweep_s_a) {
    check(s >= 0.0, "sweep_s_a", "entries must be >= 0");
  }
  cfg.out_dir = root.string("out_dir");
  check(!cfg.out_dir.empty(), "out_dir", "must not be empty");
  return cfg;
}

std::string format_number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

ScenarioConfig paper_s5()
{
  ScenarioConfig cfg;
  cfg.hv = {30.0, 2.5, 5.0, 0.9};
  cfg.av = {60.0, 2.0, 16.0, 0.85};
  cfg.road = {1000.0, 6.0, 1.2, 5.0};
  cfg.equilibrium = {150.0, 75.0, 29.16, 13.32};
  cfg.etc = EtcParams{};
  cfg.sim = SimConfig{};
  cfg.modes = {Mode::continuous, Mode::event_triggered};
  cfg.kernels = KernelSolverOptions{};
  cfg.sweep_s_a = {16.0, 20.0};
  cfg.out_dir = "out";
  return cfg;
}

ScenarioConfig parse_config(const std::string & json_text)
{
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error & e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("configuration must be a JSON object");
  }
  if (const auto it = doc.find("preset"); it != doc.end()) {
    if (!it->is_string() || it->get<std::string>() != "paper_s5") {
      throw ConfigError("'preset' must be \"paper_s5\"");
    }
    json merged = config_json(paper_s5());
    doc.erase("preset");
    merge_into(merged, doc);
    doc = std::move(merged);
  }
  return from_json(doc);
}

ScenarioConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open configuration file '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_json(const ScenarioConfig & cfg, int indent)
{
  return config_json(cfg).dump(indent);
}

std::string content_hash(const std::string & text)
{
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<RunPlan> make_run_plans(const ScenarioConfig & cfg)
{
  const std::vector<double> spacings =
    cfg.sweep_s_a.empty() ? std::vector<double>{cfg.av.s_gap} : cfg.sweep_s_a;
  const double rho_h = units::per_km_to_per_m(cfg.equilibrium.rho_h);
  const double rho_a = units::per_km_to_per_m(cfg.equilibrium.rho_a);

  std::vector<RunPlan> plans;
  for (double s_a : spacings) {
    ModelParams model;
    model.hv = {cfg.hv.tau, cfg.hv.gamma, cfg.hv.s_gap, 1.0, cfg.hv.AO_max};
    model.av = {cfg.av.tau, cfg.av.gamma, s_a, 1.0, cfg.av.AO_max};
    model.road = cfg.road;
    const FreeFlowSpeeds ff = calibrate_free_params(
      rho_h, rho_a, units::kmh_to_mps(cfg.equilibrium.v_h), units::kmh_to_mps(cfg.equilibrium.v_a),
      model, cfg.road.veh_width_d);
    model.hv.V_max = ff.V_h;
    model.av.V_max = ff.V_a;
    const Equilibrium eq = make_equilibrium(model, rho_h, rho_a);

    for (Mode mode : cfg.modes) {
      RunPlan plan;
      plan.s_a = s_a;
      plan.mode = mode;
      plan.model = model;
      plan.equilibrium = eq;
      plan.etc = cfg.etc;
      plan.sim = cfg.sim;
      plan.sim.mode = mode;
      plan.kernels = cfg.kernels;

      json hv = class_json({model.hv.tau, model.hv.gamma, model.hv.s_gap, model.hv.AO_max});
      hv["V_max"] = model.hv.V_max;
      json av = class_json({model.av.tau, model.av.gamma, model.av.s_gap, model.av.AO_max});
      av["V_max"] = model.av.V_max;
      const json canonical = {
        {"mode", to_string(mode)},
        {"model", {{"hv", hv}, {"av", av}, {"road", road_json(model.road)}}},
        {"equilibrium", {{"rho_h", eq.rho_h}, {"rho_a", eq.rho_a}, {"v_h", eq.v_h},
                         {"v_a", eq.v_a}}},
        {"etc", etc_json(plan.etc)},
        {"sim", sim_json(plan.sim)},
        {"kernels", kernels_json(plan.kernels)},
      };
      plan.canonical = canonical.dump();
      plan.run_id = to_string(mode) + "_sa" + format_number(s_a) + "_" +
                    content_hash(plan.canonical).substr(0, 8);
      plans.push_back(std::move(plan));
    }
  }
  return plans;
}

}  // namespace arzetc
