#pragma once

#include <functional>
#include <vector>

#include "pllsync/ode.hpp"
#include "pllsync/pll.hpp"
#include "pllsync/signals.hpp"

namespace pllsync::dynamics {

enum class Representation { Dq, Polar };

struct IntegratorConfig {
  double dt = 1e-5;       // s, > 0
  double t_end = 1.0;     // s, > 0
  int record_stride = 1;  // >= 1
  /// dq representation only: rescale ||v_hat|| back to gamma*V once per step
  /// when the drift exceeds 1e-9 * gamma*V.
  bool renormalize = true;

  void validate() const;
};

/// A phase step applied at `time`: the grid angle jumps by `jump`, so the
/// angle error jumps by -jump. States on both sides of the discontinuity are
/// kept here; the sample recorded at `time` is the pre-jump state.
struct Event {
  double time;
  double jump;
  double delta_before;
  double delta_after;
};

/// Time-indexed record of a closed-loop run. `delta` is the unwrapped angle
/// error in the polar representation and atan2(vq, vd) in dq. All channels
/// share the same length.
struct Trajectory {
  Representation representation = Representation::Polar;
  signals::GridModel grid;
  pll::PllConfig config;

  std::vector<double> times;
  std::vector<double> delta;
  std::vector<double> omega_hat;
  std::vector<double> u_hat;
  std::vector<double> y_tilde;  // family-matched passive output
  std::vector<double> omega;    // grid frequency at the sample
  std::vector<double> vd, vq;   // dq representation only
  std::vector<Event> events;
  int renormalizations = 0;

  std::size_t size() const { return times.size(); }
};

/// Integrates the closed loop of `cfg` against the grid in the chosen
/// representation. x0 is the estimator state; the initial angle error is
/// theta_hat - theta(0). Throws DivergedError on non-finite states.
Trajectory simulate_closed_loop(const signals::GridModel& grid,
                                const pll::PllConfig& cfg,
                                Representation representation,
                                const IntegratorConfig& icfg,
                                const pll::PllState& x0);

/// Integrates v_hat' = J2 (u(t) - omega) v_hat with a prescribed control
/// signal instead of the estimator feedback (dq representation). Used to
/// exercise the passivity balance open loop.
Trajectory simulate_open_loop(const signals::GridModel& grid,
                              const pll::PllConfig& cfg,
                              const std::function<double(double)>& u_of_t,
                              const IntegratorConfig& icfg,
                              const pll::PllState& x0);

struct EquivalenceReport {
  double max_delta_deviation = 0.0;  // sup |wrap(delta_polar - delta_dq)|
  double max_omega_deviation = 0.0;  // sup |omega_hat difference|
};

/// Runs the same configuration through both representations and reports the
/// largest deviation over the recorded samples.
EquivalenceReport representation_equivalence(const signals::GridModel& grid,
                                             const pll::PllConfig& cfg,
                                             const IntegratorConfig& icfg,
                                             const pll::PllState& x0);

}  // namespace pllsync::dynamics
