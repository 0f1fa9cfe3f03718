#pragma once
// Mean-reverting SAV time steppers for damped-driven models.
//
// The auxiliary scalar q obeys dq/dt - N(u).u = -gamma (q - 1), which keeps q
// near 1 while the nonlinear term is treated explicitly. Two schemes:
//
//   BDF2 (two-step, second order), with w = N(2u^n - u^{n-1}):
//     (3u^{n+1} - 4u^n + u^{n-1}) / (2k) + A u^{n+1} + q^{n+1} w = F
//     (3q^{n+1} - 4q^n + q^{n-1}) / (2k) + gamma q^{n+1} - w.u^{n+1} = gamma
//
//   Backward Euler (one-step, first order), with w = N(u^n):
//     (u^{n+1} - u^n) / k + A u^{n+1} + q^{n+1} w = F
//     (q^{n+1} - q^n) / k + gamma q^{n+1} - w.u^{n+1} = gamma
//
// Both are solved in closed form with a single fixed linear operator.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mrsav/linear_solve.hpp"
#include "mrsav/model.hpp"

namespace mrsav {

enum class SchemeOrder { Bdf2, BackwardEuler };
enum class InitMode { Crude, Refined };

std::string to_string(SchemeOrder order);
std::string to_string(InitMode mode);
SchemeOrder parse_scheme_order(const std::string& text);
InitMode parse_init_mode(const std::string& text);

struct SchemeParams {
  double dt = 0x1.0p-10;
  double gamma = 1000.0;
  SchemeOrder order = SchemeOrder::Bdf2;

  /// Throws InvalidArgument unless dt > 0 and gamma > 0.
  void validate() const;
  /// The energy bound is derived for dt <= 1; larger steps are allowed.
  bool within_bound_regime() const noexcept { return dt <= 1.0; }
};

/// (u^{n-1}, u^n, q^{n-1}, q^n) at step n. Single-step backward Euler reads
/// only the current slots.
struct PairState {
  StateVector u_prev;
  StateVector u_curr;
  double q_prev = 1.0;
  double q_curr = 1.0;
  std::uint64_t step_index = 0;

  bool finite() const noexcept;
};

LinearSolveCache make_cache(const DampedDrivenModel& model, const SchemeParams& params);

/// Starting pair for a run from u0.
///   Crude:   u^0 = u^1 = u0 (first-order start for BDF2).
///   Refined: u^1 from two half-size backward-Euler steps combined with one
///            full step by Richardson extrapolation, 2 u_{k/2,k/2} - u_k.
/// q^0 = q^1 = 1. For backward Euler the pair is (u0, u0) at step 0.
PairState init_pair(std::span<const double> u0, InitMode mode, const DampedDrivenModel& model,
                    const SchemeParams& params);

/// What a single step produced besides the new state.
struct StepInfo {
  /// B^n = 1 + k^2 (mass + k gamma)^-1 (M^-1 w).w; >= 1 since M is SPD.
  double b_factor = 1.0;
};

/// Scratch space for one stepper; keeps the hot loop allocation-free.
struct StepWorkspace {
  explicit StepWorkspace(std::size_t dim = 0)
      : w(dim), nw(dim), minv_nw(dim), rhs(dim), minv_rhs(dim) {}
  StateVector w, nw, minv_nw, rhs, minv_rhs;
};

/// Advances `state` in place by one mr-SAV-BDF2 step.
StepInfo bdf2_step(PairState& state, const DampedDrivenModel& model, const SchemeParams& params,
                   const LinearSolveCache& cache, StepWorkspace& ws);

/// Advances `state` in place by one mr-SAV backward-Euler step.
StepInfo be_step(PairState& state, const DampedDrivenModel& model, const SchemeParams& params,
                 const LinearSolveCache& cache, StepWorkspace& ws);

/// Value-returning convenience for either scheme.
PairState step(const PairState& state, const DampedDrivenModel& model, const SchemeParams& params,
               const LinearSolveCache& cache, StepInfo* info = nullptr);

/// Residuals of the implicit equations, reconstructed from a step
/// `before` -> `after`. Both equations are scaled by k; `*_scale` is the
/// magnitude of the largest term in each.
struct ImplicitResidual {
  double u_residual = 0.0;
  double u_scale = 0.0;
  double q_residual = 0.0;
  double q_scale = 0.0;

  bool within(double rel_tol) const noexcept {
    return u_residual <= rel_tol * u_scale && q_residual <= rel_tol * q_scale;
  }
};

ImplicitResidual implicit_residual(const PairState& before, const PairState& after,
                                   const DampedDrivenModel& model, const SchemeParams& params);

/// Owns the cache and workspace for one scheme on one model. Not
/// thread-safe; one per trajectory. The model must outlive it.
class Stepper {
 public:
  Stepper(const DampedDrivenModel& model, SchemeParams params);

  StepInfo advance(PairState& state);

  const DampedDrivenModel& model() const noexcept { return *model_; }
  const SchemeParams& params() const noexcept { return params_; }
  const LinearSolveCache& cache() const noexcept { return *cache_; }

 private:
  const DampedDrivenModel* model_;
  SchemeParams params_;
  std::shared_ptr<const LinearSolveCache> cache_;
  StepWorkspace ws_;
};

/// Per-step view handed to observers: the freshly computed u^{n+1}, q^{n+1}.
struct StepView {
  std::uint64_t step_index;
  std::span<const double> u;
  double q;
  double b_factor;
  const PairState& state;
};

using Observer = std::function<void(const StepView&)>;

struct RunSummary {
  PairState final_state;
  std::uint64_t steps = 0;
  double wall_seconds = 0.0;
  double max_u_norm = 0.0;
  /// max |q^n - 1| over the final 10% of steps.
  double max_q_drift_tail = 0.0;
  double min_b_factor = 0.0;

  double steps_per_second() const noexcept {
    return wall_seconds > 0.0 ? static_cast<double>(steps) / wall_seconds : 0.0;
  }
};

/// Performs floor(T/dt) steps from `init`, calling every observer once per
/// step in order. A non-finite value aborts with DivergenceError.
RunSummary run_trajectory(const DampedDrivenModel& model, const SchemeParams& params,
                          PairState init, double T, const std::vector<Observer>& observers);

/// Number of steps run_trajectory performs for duration T.
std::uint64_t step_count(double T, double dt);

}  // namespace mrsav
