#include "pllsync/signals.hpp"

#include <algorithm>
#include <cmath>

#include "pllsync/errors.hpp"

namespace pllsync::signals {

namespace {

constexpr double kTwoThirdsPi = 2.0 * kPi / 3.0;

// Exact integral of exp(-a s) sin(b s) over [0, T].
double damped_sine_integral(double a, double b, double T) {
  const double denom = a * a + b * b;
  if (denom == 0.0) return 0.0;
  return (b - std::exp(-a * T) * (a * std::sin(b * T) + b * std::cos(b * T))) /
         denom;
}

}  // namespace

TabulatedRocof::TabulatedRocof(double omega0, double sample_dt,
                               std::vector<double> eta, double eta_max)
    : omega0_(omega0),
      sample_dt_(sample_dt),
      eta_(std::move(eta)),
      eta_max_(eta_max) {
  if (!(omega0_ > 0.0)) throw ConfigError("tabulated_rocof: omega0 must be > 0");
  if (!(sample_dt_ > 0.0))
    throw ConfigError("tabulated_rocof: sample_dt must be > 0");
  if (!(eta_max_ >= 0.0))
    throw ConfigError("tabulated_rocof: eta_max must be >= 0");
  for (double e : eta_) {
    if (!(std::abs(e) <= eta_max_))
      throw ConfigError("tabulated_rocof: sup|eta| exceeds eta_max");
  }
  omega_joint_.resize(eta_.size(), omega0_);
  phase_joint_.resize(eta_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < eta_.size(); ++i) {
    const double h = sample_dt_;
    const double e0 = eta_[i];
    const double e1 = eta_[i + 1];
    omega_joint_[i + 1] = omega_joint_[i] + 0.5 * (e0 + e1) * h;
    phase_joint_[i + 1] = phase_joint_[i] + omega_joint_[i] * h +
                          0.5 * e0 * h * h + (e1 - e0) * h * h / 6.0;
  }
}

FrequencySample TabulatedRocof::eval(double t) const {
  if (eta_.size() < 2) {
    const double e = (!eta_.empty() && t == 0.0) ? eta_.front() : 0.0;
    return {omega0_, e};
  }
  if (t <= 0.0) return {omega0_, eta_.front()};
  const double t_last = sample_dt_ * static_cast<double>(eta_.size() - 1);
  if (t >= t_last) return {omega_joint_.back(), t == t_last ? eta_.back() : 0.0};
  auto k = static_cast<std::size_t>(t / sample_dt_);
  k = std::min(k, eta_.size() - 2);
  const double s = t - sample_dt_ * static_cast<double>(k);
  const double slope = (eta_[k + 1] - eta_[k]) / sample_dt_;
  const double e = eta_[k] + slope * s;
  const double omega = omega_joint_[k] + eta_[k] * s + 0.5 * slope * s * s;
  return {omega, e};
}

double TabulatedRocof::phase(double t) const {
  if (eta_.size() < 2 || t <= 0.0) return omega0_ * t;
  const double t_last = sample_dt_ * static_cast<double>(eta_.size() - 1);
  if (t >= t_last)
    return phase_joint_.back() + omega_joint_.back() * (t - t_last);
  auto k = static_cast<std::size_t>(t / sample_dt_);
  k = std::min(k, eta_.size() - 2);
  const double s = t - sample_dt_ * static_cast<double>(k);
  const double slope = (eta_[k + 1] - eta_[k]) / sample_dt_;
  return phase_joint_[k] + omega_joint_[k] * s + 0.5 * eta_[k] * s * s +
         slope * s * s * s / 6.0;
}

FrequencySample frequency_profile_eval(const FrequencyProfile& profile, double t) {
  return std::visit(
      [t](const auto& p) -> FrequencySample {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantFrequency>) {
          return {p.omega0, 0.0};
        } else if constexpr (std::is_same_v<T, DampedSinusoidFrequency>) {
          const double tau = t - p.onset;
          if (tau < 0.0) return {p.omega0, 0.0};
          const double env = p.amplitude * std::exp(-p.decay * tau);
          const double s = std::sin(p.angular_rate * tau);
          const double c = std::cos(p.angular_rate * tau);
          return {p.omega0 + env * s, env * (p.angular_rate * c - p.decay * s)};
        } else {
          return p.eval(t);
        }
      },
      profile);
}

double phase_integral(const FrequencyProfile& profile, double t) {
  return std::visit(
      [t](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantFrequency>) {
          return p.omega0 * t;
        } else if constexpr (std::is_same_v<T, DampedSinusoidFrequency>) {
          double phase = p.omega0 * t;
          const double tau = t - p.onset;
          if (tau > 0.0)
            phase +=
                p.amplitude * damped_sine_integral(p.decay, p.angular_rate, tau);
          return phase;
        } else {
          return p.phase(t);
        }
      },
      profile);
}

void GridModel::validate() const {
  if (!(amplitude > 0.0)) throw ConfigError("grid: amplitude must be > 0");
  if (!(frequency_profile_eval(profile, 0.0).omega > 0.0))
    throw ConfigError("grid: omega0 must be > 0");
  double prev = 0.0;
  for (const auto& step : phase_steps) {
    if (!(step.time > prev))
      throw ConfigError(
          "grid: phase-step times must be positive and strictly increasing");
    prev = step.time;
  }
}

double GridModel::theta(double t) const {
  double th = phi0 + phase_integral(profile, t);
  for (const auto& step : phase_steps) {
    if (step.time > t) break;
    th += step.jump;
  }
  return th;
}

double GridModel::omega(double t) const {
  return frequency_profile_eval(profile, t).omega;
}

double GridModel::eta(double t) const {
  return frequency_profile_eval(profile, t).eta;
}

std::array<double, 3> three_phase_sin(double angle) {
  return {std::sin(angle), std::sin(angle - kTwoThirdsPi),
          std::sin(angle + kTwoThirdsPi)};
}

ThreePhaseSample three_phase_voltage(const GridModel& model, double t) {
  const auto s = three_phase_sin(model.theta(t));
  return {model.amplitude * s[0], model.amplitude * s[1],
          model.amplitude * s[2]};
}

AlphaBetaVoltage clarke_transform(const ThreePhaseSample& s) {
  // (1/gamma) * [[0, -sqrt3/2, sqrt3/2], [1, -1/2, -1/2]]; annihilates the
  // zero sequence and maps V*sin3(theta) to gamma*V*(cos theta, sin theta).
  constexpr double kHalfSqrt3 = 0.8660254037844386467637;
  const double alpha = kHalfSqrt3 * (s.c - s.b) / kClarkeGain;
  const double beta = (s.a - 0.5 * (s.b + s.c)) / kClarkeGain;
  return {alpha, beta};
}

AlphaBetaVoltage clarke_transform_as_printed(const ThreePhaseSample& s) {
  return {kClarkeAsPrinted[0][0] * s.a + kClarkeAsPrinted[0][1] * s.b +
              kClarkeAsPrinted[0][2] * s.c,
          kClarkeAsPrinted[1][0] * s.a + kClarkeAsPrinted[1][1] * s.b +
              kClarkeAsPrinted[1][2] * s.c};
}

DqVoltage park_transform(const ThreePhaseSample& s, double theta_hat) {
  // Row d = sin3(theta_hat)/gamma, row q = -cos3(theta_hat)/gamma, so a
  // balanced input of angle theta lands on gamma*V*(cos delta, sin delta)
  // with delta = theta_hat - theta.
  const auto sn = three_phase_sin(theta_hat);
  const std::array<double, 3> cs = {std::cos(theta_hat),
                                    std::cos(theta_hat - kTwoThirdsPi),
                                    std::cos(theta_hat + kTwoThirdsPi)};
  const double d = (sn[0] * s.a + sn[1] * s.b + sn[2] * s.c) / kClarkeGain;
  const double q = -(cs[0] * s.a + cs[1] * s.b + cs[2] * s.c) / kClarkeGain;
  return {d, q};
}

double angle_from_alpha_beta(const AlphaBetaVoltage& v) {
  if (v.alpha == 0.0 && v.beta == 0.0) throw IllDefinedAngleError();
  const double a = std::atan2(v.beta, v.alpha);
  return a >= kPi ? -kPi : a;
}

}  // namespace pllsync::signals
