#pragma once

#include <stdexcept>
#include <string>

namespace pllsync {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition violation (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

/// atan2 of the zero vector.
struct IllDefinedAngleError : Error {
  IllDefinedAngleError() : Error("angle of a zero-norm vector is ill-defined") {}
};

/// Point outside the domain of the requested function.
struct DomainError : Error {
  using Error::Error;
};

/// Non-finite state during integration (CLI exit code 3).
struct DivergedError : Error {
  explicit DivergedError(double t)
      : Error("integration diverged; last valid time t=" + std::to_string(t)),
        last_valid_time(t) {}
  DivergedError(double t, const std::string& what)
      : Error(what), last_valid_time(t) {}
  double last_valid_time;
};

/// Analysis problem with an empty feasible set (CLI exit code 4).
struct InfeasibleError : Error {
  using Error::Error;
};

}  // namespace pllsync
