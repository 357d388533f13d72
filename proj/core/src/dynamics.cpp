#include "pllsync/dynamics.hpp"

#include <cmath>

#include "pllsync/errors.hpp"
#include "pllsync/math.hpp"

namespace pllsync::dynamics {

namespace {

using pll::PllConfig;
using pll::PllState;
using signals::DqVoltage;
using signals::GridModel;

constexpr double kRenormTolerance = 1e-9;

struct Recorder {
  Trajectory* traj;
  const GridModel* grid;
  const PllConfig* cfg;

  void polar_sample(double t, double delta, double omega_hat) {
    const double y = pll::output_y_polar(*cfg, delta);
    traj->times.push_back(t);
    traj->delta.push_back(delta);
    traj->omega_hat.push_back(omega_hat);
    traj->y_tilde.push_back(y);
    traj->u_hat.push_back(-cfg->k_p * pll::phi_eval(cfg->phi, y) + omega_hat);
    traj->omega.push_back(grid->omega(t));
  }

  void dq_sample(double t, const DqVoltage& v, double omega_hat,
                 double u_override = 0.0, bool has_override = false) {
    const double y = pll::output_y(*cfg, v);
    traj->times.push_back(t);
    traj->delta.push_back(std::atan2(v.q, v.d));
    traj->omega_hat.push_back(omega_hat);
    traj->y_tilde.push_back(y);
    traj->u_hat.push_back(has_override
                              ? u_override
                              : -cfg->k_p * pll::phi_eval(cfg->phi, y) +
                                    omega_hat);
    traj->omega.push_back(grid->omega(t));
    traj->vd.push_back(v.d);
    traj->vq.push_back(v.q);
  }
};

// Splits [0, t_end] at the grid's phase-step times. Returns boundaries
// (excluding 0, including t_end).
std::vector<double> segment_boundaries(const GridModel& grid, double t_end) {
  std::vector<double> bounds;
  for (const auto& step : grid.phase_steps) {
    if (step.time > 0.0 && step.time < t_end) bounds.push_back(step.time);
  }
  bounds.push_back(t_end);
  return bounds;
}

// Fixed-step march over one segment [t0, t1]; steps of dt with the final
// partial step landing exactly on t1. `on_step` advances the state and
// `record` emits a sample; recording happens on every record_stride-th global
// step and always at t1.
template <typename Step, typename Record>
void march_segment(double t0, double t1, double dt, int stride, long& step,
                   Step&& on_step, Record&& record) {
  const double span = t1 - t0;
  const auto n_full = static_cast<long>(std::floor(span / dt + 1e-9));
  const double tail = span - static_cast<double>(n_full) * dt;
  const bool has_tail = tail > dt * 1e-9;
  double t = t0;
  for (long i = 0; i < n_full; ++i) {
    const double t_next = (i + 1 == n_full && !has_tail)
                              ? t1
                              : t0 + static_cast<double>(i + 1) * dt;
    on_step(t, dt, t_next);
    t = t_next;
    ++step;
    if (step % stride == 0 || t == t1) record(t);
  }
  if (has_tail) {
    on_step(t, tail, t1);
    t = t1;
    ++step;
    record(t);
  }
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("integrator: dt must be > 0");
  if (!(t_end > 0.0)) throw ConfigError("integrator: t_end must be > 0");
  if (record_stride < 1)
    throw ConfigError("integrator: record_stride must be >= 1");
}

Trajectory simulate_closed_loop(const GridModel& grid, const PllConfig& cfg,
                                Representation representation,
                                const IntegratorConfig& icfg,
                                const PllState& x0) {
  grid.validate();
  cfg.validate();
  icfg.validate();
  const double gv = cfg.gamma_v();
  const double expected = kClarkeGain * grid.amplitude;
  if (std::abs(gv - expected) > 1e-9 * expected)
    throw ConfigError(
        "pll: reference norm must equal gamma * grid amplitude");

  Trajectory traj;
  traj.representation = representation;
  traj.grid = grid;
  traj.config = cfg;
  Recorder rec{&traj, &grid, &cfg};

  const double delta0 = x0.theta_hat - grid.theta(0.0);
  const auto bounds = segment_boundaries(grid, icfg.t_end);
  long step = 0;

  if (representation == Representation::Polar) {
    State<2> x{delta0, x0.omega_hat};
    const auto rhs = [&](double t, const State<2>& s) -> State<2> {
      const auto d = pll::rhs_polar(cfg, s[0], s[1], grid.omega(t), 0.0);
      return {d.delta_dot, d.omega_err_dot};
    };
    rec.polar_sample(0.0, x[0], x[1]);
    double t0 = 0.0;
    std::size_t event_idx = 0;
    for (double t1 : bounds) {
      march_segment(
          t0, t1, icfg.dt, icfg.record_stride, step,
          [&](double t, double h, double) {
            x = rk4_step(rhs, t, x, h);
            if (!all_finite(x)) throw DivergedError(t);
          },
          [&](double t) {
            if (traj.times.back() != t) rec.polar_sample(t, x[0], x[1]);
          });
      // Apply the phase step at an interior boundary: theta jumps by J, so
      // the angle error drops by J.
      if (event_idx < grid.phase_steps.size() &&
          grid.phase_steps[event_idx].time == t1) {
        const double jump = grid.phase_steps[event_idx].jump;
        const double before = x[0];
        x[0] -= jump;
        traj.events.push_back({t1, jump, before, x[0]});
        ++event_idx;
      }
      t0 = t1;
    }
  } else {
    State<3> x{gv * std::cos(delta0), gv * std::sin(delta0), x0.omega_hat};
    const auto rhs = [&](double t, const State<3>& s) -> State<3> {
      const auto d =
          pll::rhs_dq(cfg, {s[0], s[1]}, s[2], grid.omega(t));
      return {d.v_hat_dot.d, d.v_hat_dot.q, d.omega_hat_dot};
    };
    rec.dq_sample(0.0, {x[0], x[1]}, x[2]);
    double t0 = 0.0;
    std::size_t event_idx = 0;
    for (double t1 : bounds) {
      march_segment(
          t0, t1, icfg.dt, icfg.record_stride, step,
          [&](double t, double h, double) {
            x = rk4_step(rhs, t, x, h);
            if (!all_finite(x)) throw DivergedError(t);
            if (icfg.renormalize) {
              const double norm = std::hypot(x[0], x[1]);
              if (std::abs(norm - gv) > kRenormTolerance * gv) {
                const double scale = gv / norm;
                x[0] *= scale;
                x[1] *= scale;
                ++traj.renormalizations;
              }
            }
          },
          [&](double t) {
            if (traj.times.back() != t) rec.dq_sample(t, {x[0], x[1]}, x[2]);
          });
      if (event_idx < grid.phase_steps.size() &&
          grid.phase_steps[event_idx].time == t1) {
        const double jump = grid.phase_steps[event_idx].jump;
        const double before = std::atan2(x[1], x[0]);
        // Rotate v_hat by -jump.
        const double c = std::cos(jump);
        const double s = std::sin(jump);
        const double vd = c * x[0] + s * x[1];
        const double vq = -s * x[0] + c * x[1];
        x[0] = vd;
        x[1] = vq;
        traj.events.push_back({t1, jump, before, std::atan2(x[1], x[0])});
        ++event_idx;
      }
      t0 = t1;
    }
  }
  return traj;
}

Trajectory simulate_open_loop(const GridModel& grid, const PllConfig& cfg,
                              const std::function<double(double)>& u_of_t,
                              const IntegratorConfig& icfg,
                              const PllState& x0) {
  grid.validate();
  cfg.validate();
  icfg.validate();
  const double gv = cfg.gamma_v();

  Trajectory traj;
  traj.representation = Representation::Dq;
  traj.grid = grid;
  traj.config = cfg;
  Recorder rec{&traj, &grid, &cfg};

  const double delta0 = x0.theta_hat - grid.theta(0.0);
  State<2> x{gv * std::cos(delta0), gv * std::sin(delta0)};
  const auto rhs = [&](double t, const State<2>& s) -> State<2> {
    const double c = u_of_t(t) - grid.omega(t);
    return {-c * s[1], c * s[0]};
  };
  rec.dq_sample(0.0, {x[0], x[1]}, x0.omega_hat, u_of_t(0.0), true);
  long step = 0;
  march_segment(
      0.0, icfg.t_end, icfg.dt, icfg.record_stride, step,
      [&](double t, double h, double) {
        x = rk4_step(rhs, t, x, h);
        if (!all_finite(x)) throw DivergedError(t);
      },
      [&](double t) {
        if (traj.times.back() != t)
          rec.dq_sample(t, {x[0], x[1]}, x0.omega_hat, u_of_t(t), true);
      });
  return traj;
}

EquivalenceReport representation_equivalence(const GridModel& grid,
                                             const PllConfig& cfg,
                                             const IntegratorConfig& icfg,
                                             const PllState& x0) {
  const auto polar =
      simulate_closed_loop(grid, cfg, Representation::Polar, icfg, x0);
  const auto dq = simulate_closed_loop(grid, cfg, Representation::Dq, icfg, x0);
  EquivalenceReport report;
  const std::size_t n = std::min(polar.size(), dq.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double dd = std::abs(wrap_to_pi(polar.delta[i] - dq.delta[i]));
    const double dw = std::abs(polar.omega_hat[i] - dq.omega_hat[i]);
    if (dd > report.max_delta_deviation) report.max_delta_deviation = dd;
    if (dw > report.max_omega_deviation) report.max_omega_deviation = dw;
  }
  return report;
}

}  // namespace pllsync::dynamics
