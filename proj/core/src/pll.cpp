#include "pllsync/pll.hpp"

#include <algorithm>
#include <cmath>

#include "pllsync/errors.hpp"
#include "pllsync/math.hpp"

namespace pllsync::pll {

PiecewiseLinear::PiecewiseLinear(std::vector<std::array<double, 2>> points)
    : points_(std::move(points)) {
  if (points_.size() < 2)
    throw ConfigError("piecewise phi: need at least two breakpoints");
  bool has_origin = false;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0 && !(points_[i][0] > points_[i - 1][0]))
      throw ConfigError("piecewise phi: breakpoints must be strictly increasing");
    const double s = points_[i][0];
    const double y = points_[i][1];
    if (s == 0.0 && y == 0.0) has_origin = true;
    // Sector condition at the breakpoints.
    if (s * y < 0.0 || (s != 0.0 && y == 0.0) || (s == 0.0 && y != 0.0))
      throw ConfigError("piecewise phi: s*Phi(s) > 0 violated at a breakpoint");
  }
  if (!has_origin)
    throw ConfigError("piecewise phi: table must pass through the origin");
  // End slopes extrapolate; they must not fold the tails back through zero.
  const auto slope = [&](std::size_t i) {
    return (points_[i + 1][1] - points_[i][1]) /
           (points_[i + 1][0] - points_[i][0]);
  };
  if (points_.front()[0] < 0.0 && slope(0) < 0.0)
    throw ConfigError("piecewise phi: negative extrapolation slope at the left end");
  if (points_.back()[0] > 0.0 && slope(points_.size() - 2) < 0.0)
    throw ConfigError("piecewise phi: negative extrapolation slope at the right end");
}

double PiecewiseLinear::eval(double s) const {
  const auto segment_eval = [&](std::size_t i) {
    const double s0 = points_[i][0];
    const double y0 = points_[i][1];
    const double slope =
        (points_[i + 1][1] - y0) / (points_[i + 1][0] - s0);
    return y0 + slope * (s - s0);
  };
  if (s <= points_.front()[0]) return segment_eval(0);
  if (s >= points_.back()[0]) return segment_eval(points_.size() - 2);
  // Binary search for the segment containing s.
  std::size_t lo = 0;
  std::size_t hi = points_.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (points_[mid][0] <= s ? lo : hi) = mid;
  }
  return segment_eval(lo);
}

double phi_eval(const PhiFunction& phi, double s) {
  return std::visit(
      [s](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return s;
        } else if constexpr (std::is_same_v<T, ScaledIdentity>) {
          return f.k * s;
        } else if constexpr (std::is_same_v<T, Saturation>) {
          return std::clamp(f.slope * s, -f.limit, f.limit);
        } else {
          return f.eval(s);
        }
      },
      phi);
}

PhiFunction default_adaptive_phi() {
  return PiecewiseLinear({{-1.1, -2.0},
                          {-0.1, -1.0},
                          {0.0, 0.0},
                          {0.1, 1.0},
                          {1.1, 2.0}});
}

void PllConfig::validate() const {
  if (!(k_p > 0.0)) throw ConfigError("pll: k_p must be > 0");
  if (!(k_i > 0.0)) throw ConfigError("pll: k_i must be > 0");
  if (!(gamma_v() > 0.0)) throw ConfigError("pll: reference must be nonzero");
  if (const auto* scaled = std::get_if<ScaledIdentity>(&phi)) {
    if (!(scaled->k > 0.0)) throw ConfigError("pll: phi scale must be > 0");
  } else if (const auto* sat = std::get_if<Saturation>(&phi)) {
    if (!(sat->slope > 0.0) || !(sat->limit > 0.0))
      throw ConfigError("pll: saturation slope and limit must be > 0");
  }
}

double PllConfig::gamma_v() const { return std::hypot(reference.d, reference.q); }

double PllConfig::reference_angle() const {
  if (reference.d == 0.0 && reference.q == 0.0) throw IllDefinedAngleError();
  return wrap_to_pi(std::atan2(reference.q, reference.d));
}

PllConfig PllConfig::srf(double k_p, double k_i, double gamma_v) {
  PllConfig cfg;
  cfg.family = Family::gSrf;
  cfg.k_p = k_p;
  cfg.k_i = k_i / gamma_v;
  cfg.phi = ScaledIdentity{1.0 / gamma_v};
  cfg.reference = {gamma_v, 0.0};
  cfg.validate();
  return cfg;
}

PllConfig PllConfig::atan(double k_p, double k_i, double gamma_v) {
  PllConfig cfg;
  cfg.family = Family::gAtan;
  cfg.k_p = k_p;
  cfg.k_i = k_i;
  cfg.phi = Identity{};
  cfg.reference = {gamma_v, 0.0};
  cfg.validate();
  return cfg;
}

PllConfig PllConfig::gatan_adaptive(double k_p, double k_i, double gamma_v) {
  PllConfig cfg;
  cfg.family = Family::gAtan;
  cfg.k_p = k_p;
  cfg.k_i = k_i;
  cfg.phi = default_adaptive_phi();
  cfg.reference = {gamma_v, 0.0};
  cfg.validate();
  return cfg;
}

double output_y1(const DqVoltage& v_hat, const DqVoltage& ref) {
  // -ref' J2 v_hat with J2 = [[0, -1], [1, 0]].
  return ref.d * v_hat.q - ref.q * v_hat.d;
}

double output_y2(const DqVoltage& v_hat, const DqVoltage& ref) {
  if (v_hat.d == 0.0 && v_hat.q == 0.0) throw IllDefinedAngleError();
  if (ref.d == 0.0 && ref.q == 0.0) throw IllDefinedAngleError();
  return wrap_to_pi(std::atan2(v_hat.q, v_hat.d) - std::atan2(ref.q, ref.d));
}

double output_y(const PllConfig& cfg, const DqVoltage& v_hat) {
  return cfg.family == Family::gSrf ? output_y1(v_hat, cfg.reference)
                                    : output_y2(v_hat, cfg.reference);
}

double output_y_polar(const PllConfig& cfg, double delta) {
  const double rel = delta - cfg.reference_angle();
  if (cfg.family == Family::gSrf) {
    const double gv = cfg.gamma_v();
    return gv * gv * std::sin(rel);
  }
  return wrap_to_pi(rel);
}

double control_u(const PllConfig& cfg, const PllState& state,
                 const DqVoltage& v_hat) {
  return -cfg.k_p * phi_eval(cfg.phi, output_y(cfg, v_hat)) + state.omega_hat;
}

DqDerivative rhs_dq(const PllConfig& cfg, const DqVoltage& v_hat,
                    double omega_hat, double omega) {
  const double y = output_y(cfg, v_hat);
  const double u = -cfg.k_p * phi_eval(cfg.phi, y) + omega_hat;
  const double c = u - omega;
  return {{-c * v_hat.q, c * v_hat.d}, -cfg.k_i * y};
}

PolarDerivative rhs_polar(const PllConfig& cfg, double delta, double omega_hat,
                          double omega, double eta) {
  const double y = output_y_polar(cfg, delta);
  const double u = -cfg.k_p * phi_eval(cfg.phi, y) + omega_hat;
  return {u - omega, -cfg.k_i * y - eta};
}

}  // namespace pllsync::pll
