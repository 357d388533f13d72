#pragma once

#include <array>
#include <variant>
#include <vector>

#include "pllsync/math.hpp"

namespace pllsync::signals {

// ---------------------------------------------------------------------------
// Frequency profiles: omega(t) and its derivative eta(t) (the RoCoF).
// ---------------------------------------------------------------------------

struct FrequencySample {
  double omega;  // rad/s
  double eta;    // rad/s^2
};

struct ConstantFrequency {
  double omega0;  // rad/s, > 0
};

/// omega(t) = omega0 for t < onset, then
/// omega0 + amplitude * exp(-decay*(t-onset)) * sin(angular_rate*(t-onset)).
struct DampedSinusoidFrequency {
  double omega0;        // rad/s, > 0
  double amplitude;     // rad/s
  double decay;         // 1/s
  double angular_rate;  // rad/s
  double onset;         // s
};

/// Piecewise-linear RoCoF samples on a uniform time grid starting at t = 0.
/// omega and the phase integral are the exact integrals of the interpolant;
/// past the last sample eta drops to zero and omega holds its final value.
class TabulatedRocof {
 public:
  TabulatedRocof(double omega0, double sample_dt, std::vector<double> eta,
                 double eta_max);

  double omega0() const { return omega0_; }
  double sample_dt() const { return sample_dt_; }
  const std::vector<double>& eta() const { return eta_; }
  double eta_max() const { return eta_max_; }

  FrequencySample eval(double t) const;
  double phase(double t) const;

 private:
  double omega0_;
  double sample_dt_;
  std::vector<double> eta_;
  double eta_max_;
  std::vector<double> omega_joint_;  // omega at each sample time
  std::vector<double> phase_joint_;  // integral of omega up to each sample time
};

using FrequencyProfile =
    std::variant<ConstantFrequency, DampedSinusoidFrequency, TabulatedRocof>;

FrequencySample frequency_profile_eval(const FrequencyProfile& profile, double t);

/// Integral of omega over [0, t], in closed form per profile.
double phase_integral(const FrequencyProfile& profile, double t);

// ---------------------------------------------------------------------------
// Grid model
// ---------------------------------------------------------------------------

struct PhaseStep {
  double time;  // s, strictly increasing across the list, > 0
  double jump;  // rad, added to the grid angle at `time`
};

/// Balanced three-phase source v(t) = V * sin3(theta(t)) with
/// theta(t) = phi0 + integral of omega + accumulated phase steps at times <= t.
struct GridModel {
  double amplitude = 1.0;  // V (or per-unit), > 0
  double phi0 = 0.0;       // rad
  FrequencyProfile profile = ConstantFrequency{100.0 * kPi};
  std::vector<PhaseStep> phase_steps;

  void validate() const;
  double theta(double t) const;
  double omega(double t) const;
  double eta(double t) const;
};

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

struct ThreePhaseSample {
  double a, b, c;
};

struct AlphaBetaVoltage {
  double alpha, beta;
};

struct DqVoltage {
  double d, q;
};

/// (sin x, sin(x - 2pi/3), sin(x + 2pi/3)).
std::array<double, 3> three_phase_sin(double angle);

ThreePhaseSample three_phase_voltage(const GridModel& model, double t);

/// Amplitude-scaled Clarke transform. For a balanced v = V*sin3(theta) the
/// output is exactly gamma*V*(cos theta, sin theta) with gamma = sqrt(3/2);
/// that identity is the contract for everything downstream.
AlphaBetaVoltage clarke_transform(const ThreePhaseSample& s);

/// The 2x3 matrix sometimes quoted for the transform above, whose second row
/// comes out as sin(theta)/(2*gamma) instead of gamma*sin(theta). Kept only
/// for comparison tests against the corrected transform.
inline constexpr double kClarkeAsPrinted[2][3] = {
    {0.0, -0.8660254037844386467637 / kClarkeGain,
     0.8660254037844386467637 / kClarkeGain},
    {0.0, -0.5 / kClarkeGain, -0.5 / kClarkeGain}};

AlphaBetaVoltage clarke_transform_as_printed(const ThreePhaseSample& s);

/// Rotating-frame transform driven by the angle estimate. For v = V*sin3(theta)
/// the output is exactly gamma*V*(cos delta, sin delta) with
/// delta = theta_hat - theta.
DqVoltage park_transform(const ThreePhaseSample& s, double theta_hat);

/// atan2(beta, alpha) wrapped to [-pi, pi). Throws IllDefinedAngleError on the
/// zero vector.
double angle_from_alpha_beta(const AlphaBetaVoltage& v);

}  // namespace pllsync::signals
