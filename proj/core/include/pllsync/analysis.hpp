#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pllsync/dynamics.hpp"
#include "pllsync/pll.hpp"

namespace pllsync::analysis {

using pll::Family;
using signals::DqVoltage;

// ---------------------------------------------------------------------------
// Storage / Lyapunov functions
// ---------------------------------------------------------------------------

enum class EnergyKind { H1, H2, W1, W2, W1h, W2h, W2eps };

struct EnergyParams {
  DqVoltage ref{kClarkeGain, 0.0};
  double gamma_v = kClarkeGain;
  double k_i = 1.0;
  double omega = 100.0 * kPi;  // grid frequency the errors are measured against
  int h = 0;                   // even
  double eps = 0.0;            // > 0 for W2eps
};

/// Energy at a dq point (H1, H2, W1, W2).
double energy_eval(EnergyKind kind, const DqVoltage& v_hat, double omega_hat,
                   const EnergyParams& p);

/// Energy at a polar point (all kinds; the dq storage functions are evaluated
/// through v_hat = gamma*V*(cos delta, sin delta)). W2eps is restricted to
/// delta in (-pi, pi) and throws DomainError outside.
double energy_eval(EnergyKind kind, double delta, double omega_hat,
                   const EnergyParams& p);

/// Family-matched storage (W1 for gSrf, W2 for gAtan) along a trajectory,
/// using the recorded grid frequency and the config's integral gain.
std::vector<double> trajectory_energy(const dynamics::Trajectory& traj,
                                      EnergyKind kind);

/// |H(t_end) - H(t_0) - integral of y*(u_hat - omega) dt| with trapezoidal
/// quadrature over the recorded samples; kind selects the H1/y1 or H2/y2
/// pair. A small value certifies the passivity balance numerically.
double passivity_residual(const dynamics::Trajectory& traj, EnergyKind kind);

// ---------------------------------------------------------------------------
// Equilibrium classification
// ---------------------------------------------------------------------------

enum class EquilibriumClass { Stable, Saddle };

struct EquilibriumReport {
  double delta_eq = 0.0;
  std::array<std::array<double, 2>, 2> jacobian{};
  std::array<std::complex<double>, 2> eigenvalues{};
  EquilibriumClass classification = EquilibriumClass::Stable;
  double det = 0.0;
  double trace = 0.0;
};

/// Linearization of the conventional-instance polar dynamics at delta_eq
/// (a multiple of pi for the SRF family, an even multiple for ATAN). Inputs
/// that are not equilibria (||rhs|| > 1e-9) are rejected.
EquilibriumReport classify_equilibrium(Family family, double k_p, double k_i,
                                       double gamma_v, double delta_eq);

// ---------------------------------------------------------------------------
// Region-of-attraction inner estimates
// ---------------------------------------------------------------------------

enum class RoaKind { DerivedSublevel, AsPrinted };

struct RoaEstimate {
  Family family = Family::gSrf;
  int h = 0;  // even
  RoaKind kind = RoaKind::DerivedSublevel;
  double c_star = 0.0;
  double k_p = 0.0;
  double k_i = 0.0;
  double gamma_v = kClarkeGain;

  /// Membership of (delta, omega_hat - omega): a strict sublevel /
  /// inequality test.
  bool contains(double delta, double omega_err) const;

  /// Half-extent of the set in the omega_hat direction at delta = h*pi.
  double omega_extent() const;

  /// Half-extent in the delta direction (may exceed pi for the as-printed
  /// ATAN inequality).
  double delta_extent() const;
};

RoaEstimate roa_inner_estimate(Family family, int h, double k_p, double k_i,
                               double gamma_v, RoaKind kind);

struct RoaValidationOptions {
  double omega0 = 100.0 * kPi;
  double t_end = 2.0;
  double dt = 1e-4;
  double tol_delta = 1e-3;   // rad
  double tol_omega = 1e-2;   // rad/s
  unsigned jobs = 0;
};

struct RoaValidation {
  int n = 0;
  int converged = 0;
  double fraction = 0.0;
};

/// Samples n points uniformly inside the estimate (rejection sampling on its
/// bounding box, one counter-based RNG stream per sample index), simulates
/// each to t_end, and returns the fraction that converged to the designated
/// equilibrium (h*pi, omega0).
RoaValidation roa_validate(const RoaEstimate& est, const pll::PllConfig& cfg,
                           int n, std::uint64_t seed,
                           const RoaValidationOptions& opts = {});

// ---------------------------------------------------------------------------
// Ultimate bound under bounded RoCoF
// ---------------------------------------------------------------------------

enum class BoundVariant { AsPrinted, DerivedKhalil };

struct UltimateBound {
  BoundVariant variant = BoundVariant::DerivedKhalil;
  bool feasible = false;
  double epsilon_star = 0.0;
  double bound = 0.0;
  double lambda_min_p = 0.0;
  double lambda_max_p = 0.0;
  double lambda_min_q = 0.0;
  std::string violated;  // nonempty when infeasible
};

/// Supremum of the feasible epsilon window (P_eps > 0 and Q_eps > 0), in
/// closed form from the 2x2 positive-definiteness conditions.
double ultimate_bound_feasible_sup(double k_p, double k_i, BoundVariant variant);

/// Bound objective at a given epsilon; +inf outside the feasible set.
double ultimate_bound_objective(double k_p, double k_i, double eta_max,
                                double eps, BoundVariant variant);

/// Minimizes the bound over epsilon via a 1e4-point log grid refined by
/// golden-section search.
UltimateBound ultimate_bound(double k_p, double k_i, double eta_max,
                             BoundVariant variant);

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

/// Earliest time after which |channel| stays within band until the end;
/// nullopt if it never does. A channel that never exceeds the band settles at
/// the first sample.
std::optional<double> settling_time(const std::vector<double>& times,
                                    const std::vector<double>& channel,
                                    double band);

enum class Channel { Delta, OmegaErr };

std::optional<double> settling_time(const dynamics::Trajectory& traj,
                                    Channel channel, double band);

struct LinearSolution {
  double delta = 0.0;
  double omega_err = 0.0;
  /// True when the closed form left [-pi, pi) somewhere on [0, t], where the
  /// linear model stops being valid (checked a posteriori on a fine grid).
  bool exited_interval = false;
};

/// Closed-form solution of the in-interval ATAN error dynamics
///   delta'     = -k_p delta + omega_err
///   omega_err' = -k_i delta
/// from (delta0, omega_err0), via the eigen-decomposition of
/// [[-k_p, 1], [-k_i, 0]] (confluent form on repeated eigenvalues).
LinearSolution atan_linear_solution(double k_p, double k_i, double delta0,
                                    double omega_err0, double t);

/// Smallest/largest eigenvalue of the symmetric matrix [[a, b], [b, c]].
std::array<double, 2> symmetric_eigenvalues(double a, double b, double c);

}  // namespace pllsync::analysis
