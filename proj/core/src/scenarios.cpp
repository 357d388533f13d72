#include "pllsync/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pllsync/analysis.hpp"
#include "pllsync/errors.hpp"
#include "pllsync/math.hpp"
#include "pllsync/parallel.hpp"

namespace pllsync::scenarios {

namespace {

constexpr double kNominalOmega = 100.0 * kPi;  // 50 Hz

LabelReport summarize(const std::string& label,
                      const dynamics::Trajectory& traj) {
  LabelReport report;
  report.label = label;
  report.settling_time_omega_err =
      analysis::settling_time(traj, analysis::Channel::OmegaErr, kSettlingBand);
  report.final_delta = traj.delta.back();
  report.final_omega_hat = traj.omega_hat.back();

  const auto kind = traj.config.family == pll::Family::gSrf
                        ? analysis::EnergyKind::W1
                        : analysis::EnergyKind::W2;
  const auto energy = analysis::trajectory_energy(traj, kind);
  std::set<double> event_times;
  for (const auto& e : traj.events) event_times.insert(e.time);
  int violations = 0;
  for (std::size_t i = 1; i < energy.size(); ++i) {
    // A phase step between two samples moves the state discontinuously; the
    // storage is allowed to jump there.
    if (event_times.count(traj.times[i - 1]) ||
        event_times.count(traj.times[i]))
      continue;
    if (energy[i] - energy[i - 1] > kEnergyTolerance) ++violations;
  }
  report.energy_violations = violations;
  report.energy_monotone = violations == 0;

  for (const auto& e : traj.events) {
    // Last sample at or before the event; the event time itself is recorded
    // pre-jump.
    auto it = std::upper_bound(traj.times.begin(), traj.times.end(), e.time);
    if (it != traj.times.begin()) {
      const auto idx = static_cast<std::size_t>(it - traj.times.begin()) - 1;
      report.delta_before_events.push_back(std::abs(traj.delta[idx]));
    }
  }
  return report;
}

}  // namespace

void Scenario::validate() const {
  grid.validate();
  integrator.validate();
  if (plls.empty()) throw ConfigError("scenario: at least one pll required");
  std::set<std::string> labels;
  for (const auto& p : plls) {
    if (p.label.empty()) throw ConfigError("scenario: empty label");
    if (!labels.insert(p.label).second)
      throw ConfigError("scenario: duplicate label '" + p.label + "'");
    p.config.validate();
  }
}

Scenario builtin_scenario(std::string_view name) {
  const double gv = kClarkeGain;  // per-unit amplitude
  Scenario s;
  if (name == "high-inertia-steps") {
    s.name = "high-inertia-steps";
    s.grid.amplitude = 1.0;
    s.grid.phi0 = 0.0;
    s.grid.profile = signals::ConstantFrequency{kNominalOmega};
    s.grid.phase_steps = {{0.1, 0.2}, {0.2, -0.2}, {0.3, 0.4},
                          {0.4, -0.4}, {0.5, 0.2}};
    s.plls = {{"ATAN-PLL1", pll::PllConfig::atan(200.0, 1e3, gv)},
              {"ATAN-PLL10", pll::PllConfig::atan(2000.0, 1e3, gv)},
              {"gATAN-PLL", pll::PllConfig::gatan_adaptive(200.0, 1e3, gv)}};
    s.integrator.dt = 1e-5;
    s.integrator.t_end = 0.6;
    s.integrator.record_stride = 10;
  } else if (name == "low-inertia-disturbance") {
    s.name = "low-inertia-disturbance";
    s.grid.amplitude = 1.0;
    s.grid.phi0 = 0.0;
    s.grid.profile = signals::DampedSinusoidFrequency{
        kNominalOmega, -8.0 * kPi, 0.1, 0.2, 1.0};
    s.plls = {{"SRF-PLL", pll::PllConfig::srf(200.0, 1e3, gv)},
              {"ATAN-PLL", pll::PllConfig::atan(200.0, 1e3, gv)}};
    s.integrator.dt = 1e-5;
    s.integrator.t_end = 60.0;
    s.integrator.record_stride = 100;
  } else {
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }
  s.initial = {s.grid.phi0, kNominalOmega};  // locked start
  return s;
}

ScenarioRun run_scenario(const Scenario& scenario, unsigned jobs) {
  scenario.validate();
  ScenarioRun run;
  run.report.scenario = scenario.name;
  run.trajectories.resize(scenario.plls.size());

  parallel_for(scenario.plls.size(), jobs, [&](std::size_t i) {
    try {
      run.trajectories[i] = dynamics::simulate_closed_loop(
          scenario.grid, scenario.plls[i].config,
          dynamics::Representation::Polar, scenario.integrator,
          scenario.initial);
    } catch (const DivergedError& e) {
      throw DivergedError(e.last_valid_time,
                          "label '" + scenario.plls[i].label +
                              "': " + e.what());
    }
  });

  for (std::size_t i = 0; i < scenario.plls.size(); ++i)
    run.report.labels.push_back(
        summarize(scenario.plls[i].label, run.trajectories[i]));

  double dev = 0.0;
  for (std::size_t a = 0; a < run.trajectories.size(); ++a) {
    for (std::size_t b = a + 1; b < run.trajectories.size(); ++b) {
      const auto& ta = run.trajectories[a];
      const auto& tb = run.trajectories[b];
      const std::size_t n = std::min(ta.size(), tb.size());
      for (std::size_t k = 0; k < n; ++k)
        dev = std::max(dev, std::abs(ta.omega_hat[k] - tb.omega_hat[k]));
    }
  }
  run.report.max_frequency_estimate_deviation = dev;
  return run;
}

double power_step_to_phase_step(double delta_p, double x_g, double v) {
  if (!(x_g > 0.0) || !(v > 0.0))
    throw ConfigError("power_step: x_g and v must be > 0");
  const double s = delta_p * 2.0 * x_g / (3.0 * v * v);
  if (std::abs(s) > 1.0)
    throw InfeasibleError("power step exceeds the static transfer limit");
  return std::asin(s);
}

}  // namespace pllsync::scenarios
