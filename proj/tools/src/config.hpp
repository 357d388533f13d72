#pragma once

// Strict JSON config parsing: every object is checked against its allowed
// key set and every diagnostic carries the key path.

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

#include "pllsync/dynamics.hpp"
#include "pllsync/pll.hpp"
#include "pllsync/scenarios.hpp"
#include "pllsync/signals.hpp"

namespace pllsync::cli {

using nlohmann::json;

json load_config(const std::filesystem::path& file);

/// Requires cfg["command"] == expected.
void require_command(const json& cfg, const std::string& expected);

struct SimulateConfig {
  signals::GridModel grid;
  pll::PllConfig pll;
  dynamics::IntegratorConfig integrator;
  pll::PllState initial;
  dynamics::Representation representation = dynamics::Representation::Polar;
  std::string output = "trajectory.csv";
};

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  int count = 1;
};

struct PortraitConfig {
  signals::GridModel grid;
  pll::PllConfig pll;
  dynamics::IntegratorConfig integrator;
  AxisSpec delta;
  AxisSpec omega_err;
  std::string summary = "portrait.json";
  bool write_trajectories = false;
  std::string output_prefix = "ic";
};

struct RoaConfig {
  pll::Family family = pll::Family::gSrf;
  double k_p = 0.0;
  double k_i = 0.0;
  double gamma_v = kClarkeGain;
  double omega0 = 100.0 * kPi;
  int h = 0;
  bool as_printed = false;
  int samples = 500;
  double t_end = 2.0;
  double dt = 1e-4;
  double tol_delta = 1e-3;
  double tol_omega = 1e-2;
  std::string output = "roa.json";
};

struct BoundConfig {
  double k_p = 0.0;
  double k_i = 0.0;
  double eta_max = 0.0;
  bool as_printed = true;
  bool derived = true;
  bool empirical = false;
  double window_lo = 30.0;
  double window_hi = 60.0;
  std::string label = "ATAN-PLL";
  std::string output = "bound.json";
};

SimulateConfig parse_simulate(const json& cfg);
PortraitConfig parse_portrait(const json& cfg);
RoaConfig parse_roa(const json& cfg);
BoundConfig parse_bound(const json& cfg);
scenarios::Scenario parse_scenario(const json& cfg);

/// Validates a config file of any known command; throws ConfigError with a
/// key-path diagnostic on the first problem.
void validate_any(const json& cfg);

json scenario_report_to_json(const scenarios::ScenarioReport& report,
                             const scenarios::Scenario& scenario);

}  // namespace pllsync::cli
