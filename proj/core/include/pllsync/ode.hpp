#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pllsync/errors.hpp"

namespace pllsync::dynamics {

template <std::size_t N>
using State = std::array<double, N>;

/// One classical Runge-Kutta step of size h; rhs(t, x) -> dx/dt.
template <std::size_t N, typename Rhs>
State<N> rk4_step(Rhs&& rhs, double t, const State<N>& x, double h) {
  const State<N> k1 = rhs(t, x);
  State<N> stage;
  for (std::size_t i = 0; i < N; ++i) stage[i] = x[i] + 0.5 * h * k1[i];
  const State<N> k2 = rhs(t + 0.5 * h, stage);
  for (std::size_t i = 0; i < N; ++i) stage[i] = x[i] + 0.5 * h * k2[i];
  const State<N> k3 = rhs(t + 0.5 * h, stage);
  for (std::size_t i = 0; i < N; ++i) stage[i] = x[i] + h * k3[i];
  const State<N> k4 = rhs(t + h, stage);
  State<N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
  return out;
}

template <std::size_t N>
bool all_finite(const State<N>& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

template <std::size_t N>
struct OdeSolution {
  std::vector<double> times;
  std::vector<State<N>> states;
};

struct OdeConfig {
  double dt = 1e-5;        // > 0
  double t_end = 1.0;      // > 0
  int record_stride = 1;   // >= 1
};

/// Fixed-step RK4 from t = 0 to t_end; the final partial step is shortened to
/// land exactly on t_end. Records the initial state, every record_stride-th
/// step, and the final state. Throws DivergedError when the state stops being
/// finite.
template <std::size_t N, typename Rhs>
OdeSolution<N> integrate(Rhs&& rhs, const State<N>& x0, const OdeConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("integrator: dt must be > 0");
  if (!(cfg.t_end > 0.0)) throw ConfigError("integrator: t_end must be > 0");
  if (cfg.record_stride < 1)
    throw ConfigError("integrator: record_stride must be >= 1");

  OdeSolution<N> out;
  State<N> x = x0;
  double t = 0.0;
  long step = 0;
  out.times.push_back(t);
  out.states.push_back(x);

  const auto n_full = static_cast<long>(std::floor(cfg.t_end / cfg.dt + 1e-9));
  const double tail = cfg.t_end - static_cast<double>(n_full) * cfg.dt;
  const bool has_tail = tail > cfg.dt * 1e-9;

  const auto advance = [&](double h, double t_next) {
    x = rk4_step(rhs, t, x, h);
    if (!all_finite(x)) throw DivergedError(t);
    t = t_next;
    ++step;
  };

  for (long i = 0; i < n_full; ++i) {
    const double t_next =
        (i + 1 == n_full && !has_tail) ? cfg.t_end
                                       : static_cast<double>(i + 1) * cfg.dt;
    advance(cfg.dt, t_next);
    if (step % cfg.record_stride == 0 || (t == cfg.t_end)) {
      out.times.push_back(t);
      out.states.push_back(x);
    }
  }
  if (has_tail) {
    advance(tail, cfg.t_end);
    out.times.push_back(t);
    out.states.push_back(x);
  }
  return out;
}

}  // namespace pllsync::dynamics
