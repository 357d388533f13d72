#pragma once

#include <cmath>

namespace pllsync {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Scaling of the amplitude-preserving Clarke/Park pair, sqrt(3/2).
inline constexpr double kClarkeGain = 1.224744871391589049098642037352945695;

/// Wraps an angle to [-pi, pi); +pi maps to -pi.
inline double wrap_to_pi(double angle) {
  double a = std::fmod(angle + kPi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - kPi;
}

}  // namespace pllsync
