#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pllsync/dynamics.hpp"
#include "pllsync/pll.hpp"
#include "pllsync/signals.hpp"

namespace pllsync::scenarios {

struct LabeledPll {
  std::string label;
  pll::PllConfig config;
};

struct Scenario {
  std::string name;
  signals::GridModel grid;
  std::vector<LabeledPll> plls;
  dynamics::IntegratorConfig integrator;
  pll::PllState initial;  // shared by every labeled estimator

  void validate() const;
};

/// Built-in experiments.
///  - "high-inertia-steps": per-unit amplitude, constant 50 Hz, one phase
///    jump every 0.1 s over 0.5 s (jumps +0.2, -0.2, +0.4, -0.4, +0.2 rad),
///    ATAN-PLL1 / ATAN-PLL10 / gATAN-PLL, 0.6 s horizon.
///  - "low-inertia-disturbance": constant 50 Hz for 1 s, then the damped
///    sinusoid frequency deviation -8*pi*exp(-0.1 (t-1))*sin(0.2 (t-1));
///    SRF-PLL and ATAN-PLL, 60 s horizon.
/// Unknown names throw ConfigError.
Scenario builtin_scenario(std::string_view name);

/// Band used for the report's settling times, on |omega_hat - omega|.
inline constexpr double kSettlingBand = 0.05;  // rad/s

/// Increment above which a per-step energy increase counts as a
/// monotonicity violation.
inline constexpr double kEnergyTolerance = 1e-9;

struct LabelReport {
  std::string label;
  std::optional<double> settling_time_omega_err;  // band kSettlingBand
  double final_delta = 0.0;
  double final_omega_hat = 0.0;
  /// Family-matched storage non-increasing between recorded samples (sample
  /// pairs that straddle a phase step are excluded).
  bool energy_monotone = false;
  int energy_violations = 0;
  /// |delta| at the last sample before each phase step.
  std::vector<double> delta_before_events;
};

struct ScenarioReport {
  std::string scenario;
  std::vector<LabelReport> labels;
  /// sup over time of the largest pairwise |omega_hat| difference between
  /// labeled estimators.
  double max_frequency_estimate_deviation = 0.0;
};

struct ScenarioRun {
  ScenarioReport report;
  std::vector<dynamics::Trajectory> trajectories;  // one per label, in order
};

/// Runs every labeled estimator (in parallel) and assembles the report
/// deterministically in label order.
ScenarioRun run_scenario(const Scenario& scenario, unsigned jobs = 0);

/// Phase jump induced by an active-power reference step across a grid
/// reactance, via the power-angle relation P = 3 V^2 sin(phi) / (2 X_g) for
/// peak phase amplitude V. Steps beyond the static transfer limit throw
/// InfeasibleError.
double power_step_to_phase_step(double delta_p, double x_g, double v);

}  // namespace pllsync::scenarios
