#include "mrsav/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrsav/error.hpp"

namespace mrsav {

double g_norm_sq(std::span<const double> w1, std::span<const double> w2) {
  if (w1.size() != w2.size()) throw DimensionError("G-norm blocks must have equal length");
  // Evaluated as a sum of squares so rounding cannot push it below zero:
  // 4 V.GV = (w1 - 2 w2)^2 + w2^2.
  double s = 0.0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    const double t = w1[i] - 2.0 * w2[i];
    s += t * t + w2[i] * w2[i];
  }
  return 0.25 * s;
}

double g_norm_sq(double w1, double w2) noexcept {
  const double t = w1 - 2.0 * w2;
  return 0.25 * (t * t + w2 * w2);
}

EnergyConstants EnergyConstants::from(const DampedDrivenModel& model, const SchemeParams& params) {
  EnergyConstants c;
  c.coercivity = model.coercivity();
  c.gamma = params.gamma;
  c.forcing_sup = model.forcing_sup();
  c.alpha = std::min(c.coercivity, c.gamma) / 6.0;
  c.beta = std::min(c.alpha, c.alpha * c.c_lower);
  return c;
}

double EnergyConstants::envelope_source(double dt) const noexcept {
  return (forcing_sup * forcing_sup / (2.0 * coercivity) + gamma / 2.0) * dt;
}

double EnergyConstants::bound_radius_sq() const noexcept {
  return (forcing_sup * forcing_sup / coercivity + gamma) / (2.0 * beta);
}

double EnergyConstants::energy_bound(double e1, std::uint64_t n, double dt) const noexcept {
  return e1 * std::pow(1.0 + beta * dt, -static_cast<double>(n)) + bound_radius_sq();
}

double EnergyConstants::state_norm_bound(double e1) const noexcept {
  return std::sqrt((e1 + bound_radius_sq()) / c_lower);
}

bool EnergyConstants::envelope_holds(double e_prev, double e_next, double dt) const noexcept {
  const double lhs = (1.0 + beta * dt) * e_next;
  const double rhs = e_prev + envelope_source(dt);
  return lhs <= rhs + 8.0 * std::numeric_limits<double>::epsilon() * (lhs + rhs);
}

double discrete_energy(const PairState& state, const EnergyConstants& c, double dt) {
  double un2 = 0.0;
  for (double x : state.u_curr) un2 += x * x;
  return g_norm_sq(state.u_prev, state.u_curr) + c.alpha * dt * un2 +
         g_norm_sq(state.q_prev, state.q_curr) + c.alpha * dt * state.q_curr * state.q_curr;
}

double discrete_energy(const PairState& state, const DampedDrivenModel& model,
                       const SchemeParams& params) {
  return discrete_energy(state, EnergyConstants::from(model, params), params.dt);
}

}  // namespace mrsav
