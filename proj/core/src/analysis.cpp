#include "pllsync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pllsync/errors.hpp"
#include "pllsync/math.hpp"
#include "pllsync/parallel.hpp"
#include "pllsync/rng.hpp"

namespace pllsync::analysis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_even(int h) {
  if (h % 2 != 0) throw ConfigError("energy/roa: h must be even");
}

double ref_angle(const DqVoltage& ref) {
  if (ref.d == 0.0 && ref.q == 0.0) throw IllDefinedAngleError();
  return std::atan2(ref.q, ref.d);
}

}  // namespace

std::array<double, 2> symmetric_eigenvalues(double a, double b, double c) {
  const double mid = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  return {mid - rad, mid + rad};
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

double energy_eval(EnergyKind kind, const DqVoltage& v_hat, double omega_hat,
                   const EnergyParams& p) {
  const double werr = omega_hat - p.omega;
  switch (kind) {
    case EnergyKind::H1: {
      const double dd = v_hat.d - p.ref.d;
      const double dq = v_hat.q - p.ref.q;
      return 0.5 * (dd * dd + dq * dq);
    }
    case EnergyKind::H2: {
      const double y2 = pll::output_y2(v_hat, p.ref);
      return 0.5 * y2 * y2;
    }
    case EnergyKind::W1:
      return energy_eval(EnergyKind::H1, v_hat, omega_hat, p) +
             werr * werr / (2.0 * p.k_i);
    case EnergyKind::W2:
      return energy_eval(EnergyKind::H2, v_hat, omega_hat, p) +
             werr * werr / (2.0 * p.k_i);
    default:
      throw ConfigError("energy: polar-only kind evaluated at a dq point");
  }
}

double energy_eval(EnergyKind kind, double delta, double omega_hat,
                   const EnergyParams& p) {
  const double werr = omega_hat - p.omega;
  switch (kind) {
    case EnergyKind::H1: {
      // 0.5*||gv*T(delta) - ref||^2 = gv^2*(1 - cos(delta - delta_ref)).
      const double rel = delta - ref_angle(p.ref);
      return p.gamma_v * p.gamma_v * (1.0 - std::cos(rel));
    }
    case EnergyKind::H2: {
      const double y2 = wrap_to_pi(delta - ref_angle(p.ref));
      return 0.5 * y2 * y2;
    }
    case EnergyKind::W1:
      return energy_eval(EnergyKind::H1, delta, omega_hat, p) +
             werr * werr / (2.0 * p.k_i);
    case EnergyKind::W2:
      return energy_eval(EnergyKind::H2, delta, omega_hat, p) +
             werr * werr / (2.0 * p.k_i);
    case EnergyKind::W1h: {
      require_even(p.h);
      const double rel = delta - static_cast<double>(p.h) * kPi;
      return p.gamma_v * (1.0 - std::cos(rel)) + werr * werr / (2.0 * p.k_i);
    }
    case EnergyKind::W2h: {
      require_even(p.h);
      const double rel = delta - static_cast<double>(p.h) * kPi;
      return 0.5 * rel * rel + werr * werr / (2.0 * p.k_i);
    }
    case EnergyKind::W2eps: {
      if (!(delta > -kPi && delta < kPi))
        throw DomainError("W2eps is defined on delta in (-pi, pi)");
      if (!(p.eps > 0.0)) throw ConfigError("W2eps: eps must be > 0");
      return 0.5 * delta * delta + werr * werr / (2.0 * p.k_i) -
             p.eps * delta * werr / p.k_i;
    }
  }
  throw ConfigError("energy: unknown kind");
}

std::vector<double> trajectory_energy(const dynamics::Trajectory& traj,
                                      EnergyKind kind) {
  EnergyParams p;
  p.ref = traj.config.reference;
  p.gamma_v = traj.config.gamma_v();
  p.k_i = traj.config.k_i;
  std::vector<double> out(traj.size());
  const bool dq = traj.representation == dynamics::Representation::Dq;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    p.omega = traj.omega[i];
    out[i] = dq ? energy_eval(kind, DqVoltage{traj.vd[i], traj.vq[i]},
                              traj.omega_hat[i], p)
                : energy_eval(kind, traj.delta[i], traj.omega_hat[i], p);
  }
  return out;
}

double passivity_residual(const dynamics::Trajectory& traj, EnergyKind kind) {
  if (kind != EnergyKind::H1 && kind != EnergyKind::H2)
    throw ConfigError("passivity_residual: kind must be H1 or H2");
  if (traj.size() < 2) throw ConfigError("passivity_residual: empty trajectory");

  EnergyParams p;
  p.ref = traj.config.reference;
  p.gamma_v = traj.config.gamma_v();
  p.k_i = traj.config.k_i;

  const bool dq = traj.representation == dynamics::Representation::Dq;
  const double gv = p.gamma_v;
  const double ra = ref_angle(p.ref);

  const auto output_at = [&](std::size_t i) {
    if (kind == EnergyKind::H1) {
      if (dq)
        return pll::output_y1({traj.vd[i], traj.vq[i]}, p.ref);
      return gv * gv * std::sin(traj.delta[i] - ra);
    }
    if (dq) return pll::output_y2({traj.vd[i], traj.vq[i]}, p.ref);
    return wrap_to_pi(traj.delta[i] - ra);
  };
  const auto energy_at = [&](std::size_t i) {
    p.omega = traj.omega[i];
    return dq ? energy_eval(kind, DqVoltage{traj.vd[i], traj.vq[i]},
                            traj.omega_hat[i], p)
              : energy_eval(kind, traj.delta[i], traj.omega_hat[i], p);
  };

  double integral = 0.0;
  double prev = output_at(0) * (traj.u_hat[0] - traj.omega[0]);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double cur = output_at(i) * (traj.u_hat[i] - traj.omega[i]);
    integral += 0.5 * (prev + cur) * (traj.times[i] - traj.times[i - 1]);
    prev = cur;
  }
  return std::abs(energy_at(traj.size() - 1) - energy_at(0) - integral);
}

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

EquilibriumReport classify_equilibrium(Family family, double k_p, double k_i,
                                       double gamma_v, double delta_eq) {
  if (!(k_p > 0.0) || !(k_i > 0.0) || !(gamma_v > 0.0))
    throw ConfigError("classify: gains and gamma_v must be > 0");

  // Reject points that are not equilibria of the conventional-instance polar
  // dynamics.
  double rhs_norm;
  if (family == Family::gSrf) {
    const double y = gamma_v * std::sin(delta_eq);
    rhs_norm = std::hypot(k_p * y, k_i * y);
  } else {
    const double y = wrap_to_pi(delta_eq);
    rhs_norm = std::hypot(k_p * y, k_i * y);
  }
  if (rhs_norm > 1e-9)
    throw ConfigError("classify: point is not an equilibrium (||rhs|| > 1e-9)");

  EquilibriumReport report;
  report.delta_eq = delta_eq;
  double a, b;  // jacobian [[a, 1], [b, 0]]
  if (family == Family::gSrf) {
    const double c = std::cos(delta_eq);
    a = -k_p * gamma_v * c;
    b = -k_i * gamma_v * c;
  } else {
    a = -k_p;
    b = -k_i;
  }
  report.jacobian = {{{a, 1.0}, {b, 0.0}}};
  report.trace = a;
  report.det = -b;

  // Eigenvalues of [[a, 1], [b, 0]]: roots of x^2 - a x - b.
  const double disc = a * a + 4.0 * b;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    report.eigenvalues = {std::complex<double>(0.5 * (a - r), 0.0),
                          std::complex<double>(0.5 * (a + r), 0.0)};
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    report.eigenvalues = {std::complex<double>(0.5 * a, -im),
                          std::complex<double>(0.5 * a, im)};
  }
  if (report.det < 0.0) {
    report.classification = EquilibriumClass::Saddle;
  } else if (report.det > 0.0 && report.trace < 0.0) {
    report.classification = EquilibriumClass::Stable;
  } else {
    throw Error("classify: degenerate equilibrium");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Region of attraction
// ---------------------------------------------------------------------------

RoaEstimate roa_inner_estimate(Family family, int h, double k_p, double k_i,
                               double gamma_v, RoaKind kind) {
  require_even(h);
  if (!(k_p > 0.0) || !(k_i > 0.0) || !(gamma_v > 0.0))
    throw ConfigError("roa: gains and gamma_v must be > 0");
  RoaEstimate est;
  est.family = family;
  est.h = h;
  est.kind = kind;
  est.k_p = k_p;
  est.k_i = k_i;
  est.gamma_v = gamma_v;
  if (kind == RoaKind::DerivedSublevel) {
    // Largest sublevel set of the matched Lyapunov function: bounded by the
    // value at the nearest saddles for SRF, by the wrap interval for ATAN.
    est.c_star = family == Family::gSrf ? 2.0 * gamma_v : 0.5 * kPi * kPi;
  } else {
    est.c_star = family == Family::gSrf ? k_i / gamma_v : 4.0 * kPi * kPi * k_i;
  }
  return est;
}

bool RoaEstimate::contains(double delta, double omega_err) const {
  const double rel = delta - static_cast<double>(h) * kPi;
  if (kind == RoaKind::DerivedSublevel) {
    if (family == Family::gSrf)
      return gamma_v * (1.0 - std::cos(rel)) +
                 omega_err * omega_err / (2.0 * k_i) <
             c_star;
    return 0.5 * rel * rel + omega_err * omega_err / (2.0 * k_i) < c_star;
  }
  if (family == Family::gSrf)
    return (1.0 - std::cos(rel)) + omega_err * omega_err / (2.0 * gamma_v) <
           c_star;
  return 4.0 * rel * rel + omega_err * omega_err < c_star;
}

double RoaEstimate::omega_extent() const {
  if (kind == RoaKind::DerivedSublevel) {
    if (family == Family::gSrf) return 2.0 * std::sqrt(gamma_v * k_i);
    return std::sqrt(k_i) * kPi;
  }
  if (family == Family::gSrf) return std::sqrt(2.0 * gamma_v * c_star);
  return std::sqrt(c_star);
}

double RoaEstimate::delta_extent() const {
  if (kind == RoaKind::DerivedSublevel) return kPi;
  if (family == Family::gSrf) return kPi;  // vacuous for c_star >= 2
  return 0.5 * std::sqrt(c_star);
}

RoaValidation roa_validate(const RoaEstimate& est, const pll::PllConfig& cfg,
                           int n, std::uint64_t seed,
                           const RoaValidationOptions& opts) {
  if (n < 0) throw ConfigError("roa_validate: n must be >= 0");
  RoaValidation result;
  result.n = n;
  if (n == 0) return result;

  signals::GridModel grid;
  grid.amplitude = est.gamma_v / kClarkeGain;
  grid.phi0 = 0.0;
  grid.profile = signals::ConstantFrequency{opts.omega0};

  dynamics::IntegratorConfig icfg;
  icfg.dt = opts.dt;
  icfg.t_end = opts.t_end;
  icfg.record_stride = std::numeric_limits<int>::max();  // endpoints only

  const double target = static_cast<double>(est.h) * kPi;
  const double dx = est.delta_extent();
  const double dw = est.omega_extent();

  std::vector<char> converged(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), opts.jobs, [&](std::size_t i) {
    rng::Stream stream(seed, i);
    double delta, werr;
    do {
      delta = target + stream.uniform(-dx, dx);
      werr = stream.uniform(-dw, dw);
    } while (!est.contains(delta, werr));
    pll::PllState x0{delta, opts.omega0 + werr};
    const auto traj = dynamics::simulate_closed_loop(
        grid, cfg, dynamics::Representation::Polar, icfg, x0);
    const double df = traj.delta.back();
    const double wf = traj.omega_hat.back();
    converged[i] = std::abs(df - target) < opts.tol_delta &&
                   std::abs(wf - opts.omega0) < opts.tol_omega;
  });
  for (char c : converged) result.converged += c;
  result.fraction =
      static_cast<double>(result.converged) / static_cast<double>(n);
  return result;
}

// ---------------------------------------------------------------------------
// Ultimate bound
// ---------------------------------------------------------------------------

double ultimate_bound_feasible_sup(double k_p, double k_i,
                                   BoundVariant variant) {
  if (!(k_p > 0.0) || !(k_i > 0.0))
    throw ConfigError("ultimate_bound: gains must be > 0");
  if (variant == BoundVariant::AsPrinted) {
    // P > 0 iff eps^2 < 4 k_i; Q > 0 iff k_p - eps k_i > 0 and
    // (k_p - eps k_i) eps > (eps k_p / 2)^2.
    return std::min(2.0 * std::sqrt(k_i),
                    k_p / (k_i + 0.25 * k_p * k_p));
  }
  // P > 0 iff eps^2 < k_i; Q > 0 iff k_p - eps > 0 and
  // (k_p - eps) eps k_i > (eps k_p / 2)^2.
  return std::min({std::sqrt(k_i), k_i * k_p / (k_i + 0.25 * k_p * k_p), k_p});
}

double ultimate_bound_objective(double k_p, double k_i, double eta_max,
                                double eps, BoundVariant variant) {
  if (!(eps > 0.0)) return kInf;
  if (variant == BoundVariant::AsPrinted) {
    const auto lp = symmetric_eigenvalues(1.0, -0.5 * eps, k_i);
    const auto lq =
        symmetric_eigenvalues(k_p - eps * k_i, -0.5 * eps * k_p, eps);
    if (!(lp[0] > 0.0) || !(lq[0] > 0.0)) return kInf;
    return std::sqrt((eps * eps + k_i) * lp[1]) / (k_i * lp[0] * lq[0]) *
           eta_max;
  }
  const auto lp = symmetric_eigenvalues(0.5, -0.5 * eps, 0.5 * k_i);
  const auto lq = symmetric_eigenvalues(k_p - eps, -0.5 * eps * k_p, eps * k_i);
  if (!(lp[0] > 0.0) || !(lq[0] > 0.0)) return kInf;
  const double radius = std::sqrt(eps * eps + k_i * k_i) * eta_max / (lq[0] * k_i);
  return radius * std::sqrt(lp[1] / lp[0]);
}

UltimateBound ultimate_bound(double k_p, double k_i, double eta_max,
                             BoundVariant variant) {
  if (!(eta_max >= 0.0)) throw ConfigError("ultimate_bound: eta_max must be >= 0");
  UltimateBound result;
  result.variant = variant;

  const double sup = ultimate_bound_feasible_sup(k_p, k_i, variant);
  if (!(sup > 0.0)) {
    result.violated = "empty feasible window for epsilon";
    return result;
  }

  // The minimizer does not depend on eta_max; optimize the eta_max = 1 shape
  // so the eta_max = 0 case still reports a meaningful epsilon.
  const auto shape = [&](double eps) {
    return ultimate_bound_objective(k_p, k_i, 1.0, eps, variant);
  };

  // Coarse log grid, then golden-section refinement on the bracketing cell.
  const int grid_points = 10000;
  const double lo = sup * 1e-8;
  const double hi = sup * (1.0 - 1e-12);
  const double ratio = std::log(hi / lo) / (grid_points - 1);
  double best_eps = 0.0;
  double best_val = kInf;
  int best_idx = -1;
  for (int i = 0; i < grid_points; ++i) {
    const double eps = lo * std::exp(ratio * i);
    const double v = shape(eps);
    if (v < best_val) {
      best_val = v;
      best_eps = eps;
      best_idx = i;
    }
  }
  if (best_idx < 0) {
    result.violated = "no positive-definite point found on the epsilon grid";
    return result;
  }
  double a = lo * std::exp(ratio * std::max(0, best_idx - 1));
  double b = lo * std::exp(ratio * std::min(grid_points - 1, best_idx + 1));
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = shape(x1);
  double f2 = shape(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * b; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = shape(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = shape(x2);
    }
  }
  const double eps_star = f1 <= f2 ? x1 : x2;
  const double val = std::min(f1, f2);
  if (!std::isfinite(val)) {
    result.violated = "objective not finite at the optimum";
    return result;
  }
  result.feasible = true;
  result.epsilon_star = best_val < val ? best_eps : eps_star;
  result.bound =
      ultimate_bound_objective(k_p, k_i, eta_max, result.epsilon_star, variant);
  if (variant == BoundVariant::AsPrinted) {
    const auto lp = symmetric_eigenvalues(1.0, -0.5 * result.epsilon_star, k_i);
    const auto lq = symmetric_eigenvalues(
        k_p - result.epsilon_star * k_i, -0.5 * result.epsilon_star * k_p,
        result.epsilon_star);
    result.lambda_min_p = lp[0];
    result.lambda_max_p = lp[1];
    result.lambda_min_q = lq[0];
  } else {
    const auto lp = symmetric_eigenvalues(0.5, -0.5 * result.epsilon_star,
                                          0.5 * k_i);
    const auto lq = symmetric_eigenvalues(k_p - result.epsilon_star,
                                          -0.5 * result.epsilon_star * k_p,
                                          result.epsilon_star * k_i);
    result.lambda_min_p = lp[0];
    result.lambda_max_p = lp[1];
    result.lambda_min_q = lq[0];
  }
  return result;
}

// ---------------------------------------------------------------------------
// Settling time and the linear closed form
// ---------------------------------------------------------------------------

std::optional<double> settling_time(const std::vector<double>& times,
                                    const std::vector<double>& channel,
                                    double band) {
  if (!(band > 0.0)) throw ConfigError("settling_time: band must be > 0");
  if (times.size() != channel.size() || times.empty())
    throw ConfigError("settling_time: channel/time size mismatch");
  std::size_t last_exceed = times.size();
  for (std::size_t i = times.size(); i-- > 0;) {
    if (std::abs(channel[i]) > band) {
      last_exceed = i;
      break;
    }
  }
  if (last_exceed == times.size()) return times.front();
  if (last_exceed + 1 >= times.size()) return std::nullopt;
  return times[last_exceed + 1];
}

std::optional<double> settling_time(const dynamics::Trajectory& traj,
                                    Channel channel, double band) {
  std::vector<double> values(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    values[i] = channel == Channel::Delta ? traj.delta[i]
                                          : traj.omega_hat[i] - traj.omega[i];
  }
  return settling_time(traj.times, values, band);
}

LinearSolution atan_linear_solution(double k_p, double k_i, double delta0,
                                    double omega_err0, double t) {
  if (!(k_p > 0.0) || !(k_i > 0.0))
    throw ConfigError("atan_linear_solution: gains must be > 0");

  // e^{At} for A = [[-k_p, 1], [-k_i, 0]] in resolvent form.
  const auto propagate = [&](double s, double& d, double& w) {
    const double disc = k_p * k_p - 4.0 * k_i;
    double m00, m01, m10, m11;
    if (disc > 0.0) {
      const double r = std::sqrt(disc);
      const double l1 = 0.5 * (-k_p + r);
      const double l2 = 0.5 * (-k_p - r);
      const double e1 = std::exp(l1 * s);
      const double e2 = std::exp(l2 * s);
      // e^{At} = e1 (A - l2 I)/(l1 - l2) + e2 (A - l1 I)/(l2 - l1)
      m00 = (e1 * (-k_p - l2) - e2 * (-k_p - l1)) / (l1 - l2);
      m01 = (e1 - e2) / (l1 - l2);
      m10 = (e1 * (-k_i) - e2 * (-k_i)) / (l1 - l2);
      m11 = (e1 * (-l2) - e2 * (-l1)) / (l1 - l2);
    } else if (disc == 0.0) {
      // Confluent (Jordan) form: e^{At} = e^{l s}(I + s (A - l I)).
      const double l = -0.5 * k_p;
      const double e = std::exp(l * s);
      m00 = e * (1.0 + s * (-k_p - l));
      m01 = e * s;
      m10 = e * s * (-k_i);
      m11 = e * (1.0 - s * l);
    } else {
      const double alpha = -0.5 * k_p;
      const double beta = 0.5 * std::sqrt(-disc);
      const double e = std::exp(alpha * s);
      const double cb = std::cos(beta * s);
      const double sb = std::sin(beta * s) / beta;
      // e^{At} = e^{alpha s} (cos(beta s) I + sin(beta s)/beta (A - alpha I)).
      m00 = e * (cb + sb * (-k_p - alpha));
      m01 = e * sb;
      m10 = e * sb * (-k_i);
      m11 = e * (cb - sb * alpha);
    }
    const double d0 = d;
    const double w0 = w;
    d = m00 * d0 + m01 * w0;
    w = m10 * d0 + m11 * w0;
  };

  LinearSolution sol;
  sol.delta = delta0;
  sol.omega_err = omega_err0;
  propagate(t, sol.delta, sol.omega_err);

  // A posteriori interval check on a fine grid.
  if (t > 0.0) {
    const double rate = std::max(k_p, std::sqrt(k_i));
    const long samples =
        std::clamp<long>(static_cast<long>(std::ceil(4.0 * rate * t)), 64, 100000);
    for (long i = 0; i <= samples; ++i) {
      const double s = t * static_cast<double>(i) / static_cast<double>(samples);
      double d = delta0;
      double w = omega_err0;
      propagate(s, d, w);
      if (!(d >= -kPi && d < kPi)) {
        sol.exited_interval = true;
        break;
      }
    }
  } else {
    sol.exited_interval = !(delta0 >= -kPi && delta0 < kPi);
  }
  return sol;
}

}  // namespace pllsync::analysis
