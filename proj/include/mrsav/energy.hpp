#pragma once
// Discrete energy of the BDF2 scheme in the G-norm, G = 1/4 [[1,-2],[-2,5]],
//   E^n = |[u^{n-1};u^n]|_G^2 + alpha k |u^n|^2 + |[q^{n-1};q^n]|_G^2 + alpha k |q^n|^2,
// and the constants of its uniform-in-time bound.

#include <span>

#include "mrsav/integrators.hpp"
#include "mrsav/model.hpp"

namespace mrsav {

/// |[w1;w2]|_G^2 = (|w1|^2 - 4 w1.w2 + 5|w2|^2) / 4.
double g_norm_sq(std::span<const double> w1, std::span<const double> w2);
double g_norm_sq(double w1, double w2) noexcept;

struct EnergyConstants {
  /// Eigenvalues of G: (3 -+ 2 sqrt 2) / 4.
  static constexpr double kLower = 0.042893218813452476;
  static constexpr double kUpper = 1.4571067811865475;

  double alpha = 0.0;  // min(l0, gamma) / 6
  double beta = 0.0;   // min(alpha, alpha * C_l)
  double c_lower = kLower;
  double c_upper = kUpper;
  double coercivity = 0.0;
  double forcing_sup = 0.0;
  double gamma = 0.0;

  static EnergyConstants from(const DampedDrivenModel& model, const SchemeParams& params);

  /// (|F|^2 / (2 l0) + gamma / 2) k, the per-step source in the envelope.
  double envelope_source(double dt) const noexcept;
  /// R^2 = (|F|^2 / l0 + gamma) / (2 beta)
  double bound_radius_sq() const noexcept;
  /// E^1 / (1 + beta k)^n + R^2
  double energy_bound(double e1, std::uint64_t n, double dt) const noexcept;
  /// sqrt((E^1 + R^2) / C_l), a bound on every |u^n|.
  double state_norm_bound(double e1) const noexcept;
  /// (1 + beta k) E^{n+1} <= E^n + source, with a rounding allowance of a few ulps.
  bool envelope_holds(double e_prev, double e_next, double dt) const noexcept;
};

double discrete_energy(const PairState& state, const EnergyConstants& constants, double dt);
double discrete_energy(const PairState& state, const DampedDrivenModel& model,
                       const SchemeParams& params);

}  // namespace mrsav
