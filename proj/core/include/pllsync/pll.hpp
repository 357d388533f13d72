#pragma once

#include <array>
#include <variant>
#include <vector>

#include "pllsync/signals.hpp"

namespace pllsync::pll {

using signals::DqVoltage;

// ---------------------------------------------------------------------------
// Sector nonlinearities: Phi(0) = 0 and s * Phi(s) > 0 for s != 0.
// ---------------------------------------------------------------------------

struct Identity {};

struct ScaledIdentity {
  double k;  // > 0
};

struct Saturation {
  double slope;  // > 0
  double limit;  // > 0
};

/// Breakpoints (s, Phi(s)) through the origin, strictly increasing in s.
/// Evaluation interpolates linearly and extrapolates with the end-segment
/// slopes; construction rejects any table that violates the sector condition.
class PiecewiseLinear {
 public:
  explicit PiecewiseLinear(std::vector<std::array<double, 2>> points);
  const std::vector<std::array<double, 2>>& points() const { return points_; }
  double eval(double s) const;

 private:
  std::vector<std::array<double, 2>> points_;
};

using PhiFunction =
    std::variant<Identity, ScaledIdentity, PiecewiseLinear, Saturation>;

double phi_eval(const PhiFunction& phi, double s);

/// Gain-scheduling profile used by the generalized arctangent estimator in
/// the step scenario: local slope 10 for |s| <= 0.1, slope 1 beyond,
/// continuous at the knots. Composed with the proportional gain this runs at
/// 10*K_P near lock and K_P for large errors.
PhiFunction default_adaptive_phi();

// ---------------------------------------------------------------------------
// Estimator configuration and state
// ---------------------------------------------------------------------------

enum class Family { gSrf, gAtan };

/// PI estimator on a passive output:
///   u_hat        = -K_P * Phi(y) + omega_hat
///   omega_hat'   = -K_I * y
/// with y = y1 (gSrf) or y = y2 (gAtan) measured against `reference`.
struct PllConfig {
  Family family = Family::gAtan;
  double k_p = 0.0;
  double k_i = 0.0;
  PhiFunction phi = Identity{};
  DqVoltage reference{0.0, 0.0};  // on the circle of radius gamma*V

  void validate() const;
  double gamma_v() const;        // norm of the reference
  double reference_angle() const;

  /// Conventional synchronous-reference-frame estimator with gains (k_p, k_i):
  ///   u_hat = -k_p * Vq + omega_hat,  omega_hat' = -k_i * Vq.
  /// Realized as gSrf with Phi = ScaledIdentity(1/(gamma*V)) and the integral
  /// gain rescaled by the same factor, since y1 = gamma*V*Vq for the default
  /// reference.
  static PllConfig srf(double k_p, double k_i, double gamma_v);

  /// Conventional arctangent estimator: gAtan with Phi = Identity.
  static PllConfig atan(double k_p, double k_i, double gamma_v);

  /// gAtan with the default gain-scheduling Phi.
  static PllConfig gatan_adaptive(double k_p, double k_i, double gamma_v);
};

struct PllState {
  double theta_hat = 0.0;  // rad
  double omega_hat = 0.0;  // rad/s
};

// ---------------------------------------------------------------------------
// Passive outputs
// ---------------------------------------------------------------------------

/// y1 = -ref' * J2 * v_hat; equals gamma*V*Vq for ref = (gamma*V, 0).
double output_y1(const DqVoltage& v_hat, const DqVoltage& ref);

/// y2 = atan2(Vq_hat, Vd_hat) - atan2(Vq_ref, Vd_ref), wrapped to [-pi, pi).
double output_y2(const DqVoltage& v_hat, const DqVoltage& ref);

/// Family-matched output for a measured dq voltage.
double output_y(const PllConfig& cfg, const DqVoltage& v_hat);

/// Family-matched output as a function of the angle error delta; the exact
/// polar image of output_y: gamma^2 V^2 sin(delta - delta_ref) for gSrf,
/// wrap(delta - delta_ref) for gAtan.
double output_y_polar(const PllConfig& cfg, double delta);

// ---------------------------------------------------------------------------
// Control law and closed-loop vector fields
// ---------------------------------------------------------------------------

/// u_hat = -K_P * Phi(y) + omega_hat.
double control_u(const PllConfig& cfg, const PllState& state,
                 const DqVoltage& v_hat);

struct DqDerivative {
  DqVoltage v_hat_dot;
  double omega_hat_dot;
};

/// dq closed loop: v_hat' = J2 (u_hat - omega) v_hat, omega_hat' = -K_I y.
DqDerivative rhs_dq(const PllConfig& cfg, const DqVoltage& v_hat,
                    double omega_hat, double omega);

struct PolarDerivative {
  double delta_dot;
  /// d/dt of the frequency error omega_hat - omega: -K_I y - eta. With
  /// eta = 0 this is omega_hat' itself.
  double omega_err_dot;
};

/// Polar image of the same closed loop, with the RoCoF entering the
/// frequency-error channel.
PolarDerivative rhs_polar(const PllConfig& cfg, double delta, double omega_hat,
                          double omega, double eta);

}  // namespace pllsync::pll
