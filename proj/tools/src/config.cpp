#include "config.hpp"

#include <fstream>
#include <set>

#include "pllsync/errors.hpp"
#include "pllsync/math.hpp"

namespace pllsync::cli {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_->is_object()) fail(path_, "must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j_->items()) {
      if (!keys.count(item.key())) fail(path_ + "." + item.key(), "unknown key");
    }
  }

  bool has(const char* key) const { return j_->contains(key); }

  Node child(const char* key) const {
    if (!j_->contains(key)) fail(path_, "missing required key '" + std::string(key) + "'");
    return Node((*j_)[key], path_ + "." + key);
  }

  double number(const char* key) const {
    const auto n = child(key);
    if (!n.raw().is_number()) fail(n.path(), "must be a number");
    return n.raw().get<double>();
  }

  double number_or(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  double positive(const char* key) const {
    const double v = number(key);
    if (!(v > 0.0)) fail(path_ + "." + key, "must be > 0");
    return v;
  }

  int integer(const char* key) const {
    const auto n = child(key);
    if (!n.raw().is_number_integer()) fail(n.path(), "must be an integer");
    return n.raw().get<int>();
  }

  bool boolean_or(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto n = child(key);
    if (!n.raw().is_boolean()) fail(n.path(), "must be a boolean");
    return n.raw().get<bool>();
  }

  std::string text(const char* key) const {
    const auto n = child(key);
    if (!n.raw().is_string()) fail(n.path(), "must be a string");
    return n.raw().get<std::string>();
  }

  std::string text_or(const char* key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

 private:
  const json* j_;
  std::string path_;
};

signals::FrequencyProfile parse_profile(const Node& node) {
  const std::string type = node.text("type");
  if (type == "constant") {
    node.expect_object({"type", "omega0"});
    return signals::ConstantFrequency{node.positive("omega0")};
  }
  if (type == "damped_sinusoid") {
    node.expect_object(
        {"type", "omega0", "amplitude", "decay", "angular_rate", "onset"});
    return signals::DampedSinusoidFrequency{
        node.positive("omega0"), node.number("amplitude"),
        node.number("decay"), node.number("angular_rate"),
        node.number("onset")};
  }
  if (type == "tabulated_rocof") {
    node.expect_object({"type", "omega0", "sample_dt", "eta", "eta_max"});
    const auto eta_node = node.child("eta");
    if (!eta_node.raw().is_array()) fail(eta_node.path(), "must be an array");
    std::vector<double> eta;
    for (const auto& v : eta_node.raw()) {
      if (!v.is_number()) fail(eta_node.path(), "entries must be numbers");
      eta.push_back(v.get<double>());
    }
    try {
      return signals::TabulatedRocof(node.positive("omega0"),
                                     node.positive("sample_dt"), std::move(eta),
                                     node.number("eta_max"));
    } catch (const ConfigError& e) {
      fail(node.path(), e.what());
    }
  }
  fail(node.path() + ".type",
       "must be one of constant | damped_sinusoid | tabulated_rocof");
}

signals::GridModel parse_grid(const Node& node) {
  node.expect_object({"amplitude", "phi0", "profile", "phase_steps"});
  signals::GridModel grid;
  grid.amplitude = node.number_or("amplitude", 1.0);
  grid.phi0 = node.number_or("phi0", 0.0);
  grid.profile = parse_profile(node.child("profile"));
  if (node.has("phase_steps")) {
    const auto steps = node.child("phase_steps");
    if (!steps.raw().is_array()) fail(steps.path(), "must be an array");
    int i = 0;
    for (const auto& s : steps.raw()) {
      const Node sn(s, steps.path() + "[" + std::to_string(i++) + "]");
      sn.expect_object({"time", "jump"});
      grid.phase_steps.push_back({sn.positive("time"), sn.number("jump")});
    }
  }
  try {
    grid.validate();
  } catch (const ConfigError& e) {
    fail(node.path(), e.what());
  }
  return grid;
}

pll::PhiFunction parse_phi(const Node& node) {
  const std::string type = node.text("type");
  if (type == "identity") {
    node.expect_object({"type"});
    return pll::Identity{};
  }
  if (type == "scaled_identity") {
    node.expect_object({"type", "k"});
    return pll::ScaledIdentity{node.positive("k")};
  }
  if (type == "saturation") {
    node.expect_object({"type", "slope", "limit"});
    return pll::Saturation{node.positive("slope"), node.positive("limit")};
  }
  if (type == "piecewise_linear") {
    node.expect_object({"type", "points"});
    const auto pts = node.child("points");
    if (!pts.raw().is_array()) fail(pts.path(), "must be an array of [s, phi] pairs");
    std::vector<std::array<double, 2>> points;
    for (const auto& p : pts.raw()) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
          !p[1].is_number())
        fail(pts.path(), "entries must be [s, phi] number pairs");
      points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    try {
      return pll::PiecewiseLinear(std::move(points));
    } catch (const ConfigError& e) {
      fail(node.path(), e.what());
    }
  }
  fail(node.path() + ".type",
       "must be one of identity | scaled_identity | saturation | piecewise_linear");
}

pll::PllConfig parse_pll(const Node& node, double grid_amplitude) {
  node.expect_object(
      {"family", "k_p", "k_i", "phi", "reference_angle", "reference"});
  const std::string family = node.text("family");
  const double k_p = node.positive("k_p");
  const double k_i = node.positive("k_i");
  const double gamma_v = kClarkeGain * grid_amplitude;

  if (node.has("reference") && node.has("reference_angle"))
    fail(node.path(), "give either reference or reference_angle, not both");

  pll::PllConfig cfg;
  if (family == "srf" || family == "atan") {
    if (node.has("phi"))
      fail(node.path() + ".phi",
           "conventional families fix phi; use gsrf/gatan to choose one");
    cfg = family == "srf" ? pll::PllConfig::srf(k_p, k_i, gamma_v)
                          : pll::PllConfig::atan(k_p, k_i, gamma_v);
  } else if (family == "gsrf" || family == "gatan") {
    cfg.family = family == "gsrf" ? pll::Family::gSrf : pll::Family::gAtan;
    cfg.k_p = k_p;
    cfg.k_i = k_i;
    cfg.phi = node.has("phi") ? parse_phi(node.child("phi"))
                              : pll::PhiFunction(pll::Identity{});
    cfg.reference = {gamma_v, 0.0};
  } else {
    fail(node.path() + ".family", "must be one of srf | atan | gsrf | gatan");
  }

  if (node.has("reference_angle")) {
    const double angle = node.number("reference_angle");
    cfg.reference = {gamma_v * std::cos(angle), gamma_v * std::sin(angle)};
  } else if (node.has("reference")) {
    const auto ref = node.child("reference");
    ref.expect_object({"d", "q"});
    cfg.reference = {ref.number("d"), ref.number("q")};
    const double norm = std::hypot(cfg.reference.d, cfg.reference.q);
    if (std::abs(norm - gamma_v) > 1e-9 * gamma_v)
      fail(ref.path(), "reference norm must equal gamma * grid amplitude");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    fail(node.path(), e.what());
  }
  return cfg;
}

dynamics::IntegratorConfig parse_integrator(const Node& node) {
  node.expect_object({"dt", "t_end", "record_stride", "renormalize"});
  dynamics::IntegratorConfig icfg;
  icfg.dt = node.positive("dt");
  icfg.t_end = node.positive("t_end");
  if (node.has("record_stride")) {
    icfg.record_stride = node.integer("record_stride");
    if (icfg.record_stride < 1)
      fail(node.path() + ".record_stride", "must be >= 1");
  }
  icfg.renormalize = node.boolean_or("renormalize", true);
  if (icfg.dt > 1e-3) fail(node.path() + ".dt", "must be <= 1e-3");
  return icfg;
}

pll::PllState parse_initial(const Node& node, const signals::GridModel& grid) {
  node.expect_object({"delta", "theta_hat", "omega_hat"});
  if (node.has("delta") == node.has("theta_hat"))
    fail(node.path(), "give exactly one of delta or theta_hat");
  pll::PllState x0;
  x0.omega_hat = node.number("omega_hat");
  x0.theta_hat = node.has("theta_hat")
                     ? node.number("theta_hat")
                     : grid.theta(0.0) + node.number("delta");
  return x0;
}

AxisSpec parse_axis(const Node& node) {
  node.expect_object({"min", "max", "count"});
  AxisSpec axis;
  axis.min = node.number("min");
  axis.max = node.number("max");
  axis.count = node.integer("count");
  if (axis.count < 1) fail(node.path() + ".count", "must be >= 1");
  if (!(axis.max >= axis.min)) fail(node.path(), "max must be >= min");
  return axis;
}

pll::Family parse_family_name(const Node& node) {
  const std::string family = node.text("family");
  if (family == "srf") return pll::Family::gSrf;
  if (family == "atan") return pll::Family::gAtan;
  fail(node.path() + ".family", "must be srf | atan");
}

}  // namespace

json load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in '" + file.string() +
                      "': " + e.what());
  }
}

void require_command(const json& cfg, const std::string& expected) {
  const Node root(cfg, "config");
  if (!root.has("command")) fail("config", "missing required key 'command'");
  const std::string got = root.text("command");
  if (got != expected)
    fail("config.command", "expected '" + expected + "', got '" + got + "'");
}

SimulateConfig parse_simulate(const json& cfg) {
  const Node root(cfg, "config");
  root.expect_object({"command", "grid", "pll", "integrator", "initial",
                      "representation", "output"});
  SimulateConfig out;
  out.grid = parse_grid(root.child("grid"));
  out.pll = parse_pll(root.child("pll"), out.grid.amplitude);
  out.integrator = parse_integrator(root.child("integrator"));
  out.initial = parse_initial(root.child("initial"), out.grid);
  const std::string rep = root.text_or("representation", "polar");
  if (rep == "polar") {
    out.representation = dynamics::Representation::Polar;
  } else if (rep == "dq") {
    out.representation = dynamics::Representation::Dq;
  } else {
    fail("config.representation", "must be polar | dq");
  }
  out.output = root.text_or("output", "trajectory.csv");
  return out;
}

PortraitConfig parse_portrait(const json& cfg) {
  const Node root(cfg, "config");
  root.expect_object({"command", "grid", "pll", "integrator", "portrait",
                      "summary", "write_trajectories", "output_prefix"});
  PortraitConfig out;
  out.grid = parse_grid(root.child("grid"));
  out.pll = parse_pll(root.child("pll"), out.grid.amplitude);
  out.integrator = parse_integrator(root.child("integrator"));
  const Node grid_node = root.child("portrait");
  grid_node.expect_object({"delta", "omega_err"});
  out.delta = parse_axis(grid_node.child("delta"));
  out.omega_err = parse_axis(grid_node.child("omega_err"));
  out.summary = root.text_or("summary", "portrait.json");
  out.write_trajectories = root.boolean_or("write_trajectories", false);
  out.output_prefix = root.text_or("output_prefix", "ic");
  return out;
}

RoaConfig parse_roa(const json& cfg) {
  const Node root(cfg, "config");
  root.expect_object({"command", "family", "k_p", "k_i", "gamma_v", "omega0",
                      "h", "kind", "samples", "validation", "output"});
  RoaConfig out;
  out.family = parse_family_name(root);
  out.k_p = root.positive("k_p");
  out.k_i = root.positive("k_i");
  out.gamma_v = root.number_or("gamma_v", kClarkeGain);
  if (!(out.gamma_v > 0.0)) fail("config.gamma_v", "must be > 0");
  out.omega0 = root.number_or("omega0", 100.0 * kPi);
  if (root.has("h")) {
    out.h = root.integer("h");
    if (out.h % 2 != 0) fail("config.h", "must be even");
  }
  const std::string kind = root.text_or("kind", "derived-sublevel");
  if (kind == "derived-sublevel") {
    out.as_printed = false;
  } else if (kind == "as-printed") {
    out.as_printed = true;
  } else {
    fail("config.kind", "must be derived-sublevel | as-printed");
  }
  if (root.has("samples")) {
    out.samples = root.integer("samples");
    if (out.samples < 0) fail("config.samples", "must be >= 0");
  }
  if (root.has("validation")) {
    const Node v = root.child("validation");
    v.expect_object({"t_end", "dt", "tol_delta", "tol_omega"});
    out.t_end = v.number_or("t_end", out.t_end);
    out.dt = v.number_or("dt", out.dt);
    out.tol_delta = v.number_or("tol_delta", out.tol_delta);
    out.tol_omega = v.number_or("tol_omega", out.tol_omega);
  }
  out.output = root.text_or("output", "roa.json");
  return out;
}

BoundConfig parse_bound(const json& cfg) {
  const Node root(cfg, "config");
  root.expect_object({"command", "k_p", "k_i", "eta_max", "variant",
                      "empirical", "window", "label", "output"});
  BoundConfig out;
  out.k_p = root.positive("k_p");
  out.k_i = root.positive("k_i");
  out.eta_max = root.number("eta_max");
  if (!(out.eta_max >= 0.0)) fail("config.eta_max", "must be >= 0");
  const std::string variant = root.text_or("variant", "both");
  if (variant == "as-printed") {
    out.derived = false;
  } else if (variant == "derived-khalil") {
    out.as_printed = false;
  } else if (variant != "both") {
    fail("config.variant", "must be as-printed | derived-khalil | both");
  }
  out.empirical = root.boolean_or("empirical", false);
  if (root.has("window")) {
    const auto w = root.child("window");
    if (!w.raw().is_array() || w.raw().size() != 2 ||
        !w.raw()[0].is_number() || !w.raw()[1].is_number())
      fail(w.path(), "must be [t_lo, t_hi]");
    out.window_lo = w.raw()[0].get<double>();
    out.window_hi = w.raw()[1].get<double>();
    if (!(out.window_hi > out.window_lo))
      fail(w.path(), "t_hi must exceed t_lo");
  }
  out.label = root.text_or("label", "ATAN-PLL");
  out.output = root.text_or("output", "bound.json");
  return out;
}

scenarios::Scenario parse_scenario(const json& cfg) {
  const Node root(cfg, "config");
  if (root.has("name") && !root.has("grid")) {
    root.expect_object({"command", "name"});
    return scenarios::builtin_scenario(root.text("name"));
  }
  root.expect_object(
      {"command", "name", "grid", "plls", "integrator", "initial"});
  scenarios::Scenario s;
  s.name = root.text_or("name", "custom");
  s.grid = parse_grid(root.child("grid"));
  const auto plls = root.child("plls");
  if (!plls.raw().is_array()) fail(plls.path(), "must be an array");
  int i = 0;
  for (const auto& entry : plls.raw()) {
    const Node pn(entry, plls.path() + "[" + std::to_string(i++) + "]");
    pn.expect_object({"label", "pll"});
    s.plls.push_back(
        {pn.text("label"), parse_pll(pn.child("pll"), s.grid.amplitude)});
  }
  s.integrator = parse_integrator(root.child("integrator"));
  if (root.has("initial")) {
    s.initial = parse_initial(root.child("initial"), s.grid);
  } else {
    s.initial = {s.grid.theta(0.0), s.grid.omega(0.0)};
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    fail("config", e.what());
  }
  return s;
}

void validate_any(const json& cfg) {
  const Node root(cfg, "config");
  if (!root.has("command")) fail("config", "missing required key 'command'");
  const std::string command = root.text("command");
  if (command == "simulate") {
    (void)parse_simulate(cfg);
  } else if (command == "portrait") {
    (void)parse_portrait(cfg);
  } else if (command == "roa") {
    (void)parse_roa(cfg);
  } else if (command == "bound") {
    (void)parse_bound(cfg);
  } else if (command == "scenario") {
    (void)parse_scenario(cfg);
  } else {
    fail("config.command",
         "must be one of simulate | portrait | roa | bound | scenario");
  }
}

json scenario_report_to_json(const scenarios::ScenarioReport& report,
                             const scenarios::Scenario& scenario) {
  json labels = json::array();
  for (const auto& label : report.labels) {
    json entry;
    entry["label"] = label.label;
    if (label.settling_time_omega_err) {
      entry["settling_time_omega_err"] = *label.settling_time_omega_err;
    } else {
      entry["settling_time_omega_err"] = nullptr;
    }
    entry["final_delta"] = label.final_delta;
    entry["final_omega_hat"] = label.final_omega_hat;
    entry["energy_monotone"] = label.energy_monotone;
    entry["energy_violations"] = label.energy_violations;
    entry["delta_before_events"] = label.delta_before_events;
    labels.push_back(entry);
  }
  json out;
  out["scenario"] = report.scenario;
  out["labels"] = labels;
  out["max_frequency_estimate_deviation"] =
      report.max_frequency_estimate_deviation;
  out["settling_band"] = scenarios::kSettlingBand;
  out["integrator"] = {{"dt", scenario.integrator.dt},
                       {"t_end", scenario.integrator.t_end},
                       {"record_stride", scenario.integrator.record_stride}};
  return out;
}

}  // namespace pllsync::cli
