#include "mrsav/integrators.hpp"

#include <algorithm>
#include <cmath>

#include "mrsav/energy.hpp"
#include "mrsav/error.hpp"
#include "mrsav/simd/kernels.hpp"

#if !defined(NDEBUG) && !defined(MRSAV_NO_RESIDUAL_CHECKS)
#define MRSAV_CHECK_RESIDUALS 1
#endif

namespace mrsav {

std::string to_string(SchemeOrder order) {
  return order == SchemeOrder::Bdf2 ? "bdf2" : "be";
}

std::string to_string(InitMode mode) { return mode == InitMode::Crude ? "crude" : "refined"; }

SchemeOrder parse_scheme_order(const std::string& text) {
  if (text == "bdf2" || text == "BDF2") return SchemeOrder::Bdf2;
  if (text == "be" || text == "BE" || text == "backward-euler") return SchemeOrder::BackwardEuler;
  throw InvalidArgument("unknown scheme order '" + text + "' (expected bdf2 or be)");
}

InitMode parse_init_mode(const std::string& text) {
  if (text == "crude") return InitMode::Crude;
  if (text == "refined") return InitMode::Refined;
  throw InvalidArgument("unknown init mode '" + text + "' (expected crude or refined)");
}

void SchemeParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive and finite");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidArgument("gamma must be positive and finite");
}

bool PairState::finite() const noexcept {
  auto ok = [](const StateVector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(u_prev) && ok(u_curr) && std::isfinite(q_prev) && std::isfinite(q_curr);
}

LinearSolveCache make_cache(const DampedDrivenModel& model, const SchemeParams& params) {
  params.validate();
  const double mass = params.order == SchemeOrder::Bdf2 ? 1.5 : 1.0;
  return LinearSolveCache(model, params.dt, mass, params.gamma);
}

namespace {

void require_dims(const PairState& s, std::size_t d) {
  if (s.u_prev.size() != d || s.u_curr.size() != d)
    throw DimensionError("pair state length does not match model dimension " + std::to_string(d));
}

[[noreturn]] void diverged(const PairState& s, const DampedDrivenModel& model,
                           const SchemeParams& params, const char* what) {
  double e = std::numeric_limits<double>::quiet_NaN();
  if (params.order == SchemeOrder::Bdf2) e = discrete_energy(s, model, params);
  throw DivergenceError(s.step_index, e, what);
}

}  // namespace

StepInfo bdf2_step(PairState& s, const DampedDrivenModel& model, const SchemeParams& params,
                   const LinearSolveCache& cache, StepWorkspace& ws) {
  const std::size_t d = model.dim();
  const auto& k = simd::active();
  const double dt = params.dt;
  const double c = cache.scalar_prefactor();

  // w = 2u^n - u^{n-1}, then N(w) and M^-1 N(w)
  k.axpby(2.0, s.u_curr.data(), -1.0, s.u_prev.data(), ws.w.data(), d);
  model.nonlinear(ws.w, ws.nw);
  cache.solve(ws.nw, ws.minv_nw);
  const double b = 1.0 + dt * dt * c * k.dot(ws.minv_nw.data(), ws.nw.data(), d);

  // M^-1 ((4u^n - u^{n-1})/2 + k F)
  k.axpby(2.0, s.u_curr.data(), -0.5, s.u_prev.data(), ws.rhs.data(), d);
  cache.solve(ws.rhs, ws.minv_rhs);
  k.axpby(1.0, ws.minv_rhs.data(), dt, cache.forcing_image().data(), ws.minv_rhs.data(), d);

  const double q_next = c / b *
                        ((4.0 * s.q_curr - s.q_prev) / 2.0 + dt * params.gamma +
                         dt * k.dot(ws.nw.data(), ws.minv_rhs.data(), d));
  if (!std::isfinite(b) || !std::isfinite(q_next))
    diverged(s, model, params, "non-finite auxiliary variable");

  // u^{n+1} lands in the old u^{n-1} slot, then the slots swap.
  k.axpby(1.0, ws.minv_rhs.data(), -dt * q_next, ws.minv_nw.data(), s.u_prev.data(), d);
  std::swap(s.u_prev, s.u_curr);
  s.q_prev = s.q_curr;
  s.q_curr = q_next;
  ++s.step_index;
  return StepInfo{b};
}

StepInfo be_step(PairState& s, const DampedDrivenModel& model, const SchemeParams& params,
                 const LinearSolveCache& cache, StepWorkspace& ws) {
  const std::size_t d = model.dim();
  const auto& k = simd::active();
  const double dt = params.dt;
  const double c = cache.scalar_prefactor();

  model.nonlinear(s.u_curr, ws.nw);
  cache.solve(ws.nw, ws.minv_nw);
  const double b = 1.0 + dt * dt * c * k.dot(ws.nw.data(), ws.minv_nw.data(), d);

  // M^-1 (u^n + k F)
  cache.solve(s.u_curr, ws.minv_rhs);
  k.axpby(1.0, ws.minv_rhs.data(), dt, cache.forcing_image().data(), ws.minv_rhs.data(), d);

  const double q_next =
      c / b * (dt * params.gamma + s.q_curr + dt * k.dot(ws.nw.data(), ws.minv_rhs.data(), d));
  if (!std::isfinite(b) || !std::isfinite(q_next))
    diverged(s, model, params, "non-finite auxiliary variable");

  k.axpby(1.0, ws.minv_rhs.data(), -dt * q_next, ws.minv_nw.data(), s.u_prev.data(), d);
  std::swap(s.u_prev, s.u_curr);
  s.q_prev = s.q_curr;
  s.q_curr = q_next;
  ++s.step_index;
  return StepInfo{b};
}

PairState step(const PairState& state, const DampedDrivenModel& model, const SchemeParams& params,
               const LinearSolveCache& cache, StepInfo* info) {
  require_dims(state, model.dim());
  PairState next = state;
  StepWorkspace ws(model.dim());
  const StepInfo si = params.order == SchemeOrder::Bdf2 ? bdf2_step(next, model, params, cache, ws)
                                                        : be_step(next, model, params, cache, ws);
  if (info) *info = si;
  return next;
}

PairState init_pair(std::span<const double> u0, InitMode mode, const DampedDrivenModel& model,
                    const SchemeParams& params) {
  params.validate();
  if (u0.size() != model.dim())
    throw DimensionError("initial state has length " + std::to_string(u0.size()) +
                         ", model dim is " + std::to_string(model.dim()));
  for (double x : u0)
    if (!std::isfinite(x)) throw InvalidArgument("initial state must be finite");

  PairState s;
  s.u_prev.assign(u0.begin(), u0.end());
  s.u_curr.assign(u0.begin(), u0.end());
  s.q_prev = s.q_curr = 1.0;
  s.step_index = 0;
  if (params.order == SchemeOrder::BackwardEuler) return s;

  s.step_index = 1;
  if (mode == InitMode::Crude) return s;

  SchemeParams full = params;
  full.order = SchemeOrder::BackwardEuler;
  SchemeParams half = full;
  half.dt = params.dt / 2.0;
  const LinearSolveCache full_cache = make_cache(model, full);
  const LinearSolveCache half_cache = make_cache(model, half);
  StepWorkspace ws(model.dim());

  PairState a;
  a.u_prev = a.u_curr = StateVector(u0.begin(), u0.end());
  PairState b = a;
  be_step(a, model, full, full_cache, ws);
  be_step(b, model, half, half_cache, ws);
  be_step(b, model, half, half_cache, ws);
  for (std::size_t i = 0; i < model.dim(); ++i) s.u_curr[i] = 2.0 * b.u_curr[i] - a.u_curr[i];
  return s;
}

ImplicitResidual implicit_residual(const PairState& before, const PairState& after,
                                   const DampedDrivenModel& model, const SchemeParams& params) {
  const std::size_t d = model.dim();
  require_dims(before, d);
  require_dims(after, d);
  const double dt = params.dt;
  const bool bdf2 = params.order == SchemeOrder::Bdf2;

  StateVector w(d), nw(d), au(d);
  for (std::size_t i = 0; i < d; ++i)
    w[i] = bdf2 ? 2.0 * before.u_curr[i] - before.u_prev[i] : before.u_curr[i];
  model.nonlinear(w, nw);
  model.damping().multiply(after.u_curr, au);
  const auto f = model.forcing();
  const double qn = after.q_curr;

  ImplicitResidual r;
  double res2 = 0.0;
  double scale = 1.0;
  double nw_dot_u = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double un1 = after.u_curr[i], un = before.u_curr[i], um1 = before.u_prev[i];
    const double diff = bdf2 ? (3.0 * un1 - 4.0 * un + um1) / 2.0 : un1 - un;
    const double ri = diff + dt * (au[i] + qn * nw[i] - f[i]);
    res2 += ri * ri;
    scale = std::max({scale, std::fabs(un1) * (bdf2 ? 1.5 : 1.0), std::fabs(un) * (bdf2 ? 2.0 : 1.0),
                      std::fabs(dt * au[i]), std::fabs(dt * qn * nw[i]), std::fabs(dt * f[i])});
    nw_dot_u += nw[i] * un1;
  }
  r.u_residual = std::sqrt(res2);
  r.u_scale = scale * std::sqrt(static_cast<double>(d));

  const double qdiff = bdf2 ? (3.0 * qn - 4.0 * before.q_curr + before.q_prev) / 2.0 : qn - before.q_curr;
  r.q_residual = std::fabs(qdiff + dt * (params.gamma * qn - nw_dot_u - params.gamma));
  double nw_abs_u = 0.0;
  for (std::size_t i = 0; i < d; ++i) nw_abs_u += std::fabs(nw[i] * after.u_curr[i]);
  r.q_scale = std::max({1.0, 2.0 * std::fabs(before.q_curr), 1.5 * std::fabs(qn),
                        std::fabs(dt * params.gamma * qn), dt * nw_abs_u, dt * params.gamma});
  return r;
}

Stepper::Stepper(const DampedDrivenModel& model, SchemeParams params)
    : model_(&model),
      params_(params),
      cache_(std::make_shared<const LinearSolveCache>(make_cache(model, params))),
      ws_(model.dim()) {}

StepInfo Stepper::advance(PairState& state) {
#if defined(MRSAV_CHECK_RESIDUALS)
  const PairState before = state;
#endif
  const StepInfo info = params_.order == SchemeOrder::Bdf2
                            ? bdf2_step(state, *model_, params_, *cache_, ws_)
                            : be_step(state, *model_, params_, *cache_, ws_);
#if defined(MRSAV_CHECK_RESIDUALS)
  if (!implicit_residual(before, state, *model_, params_).within(1e-10))
    throw Error("implicit residual check failed at step " + std::to_string(state.step_index));
#endif
  return info;
}

std::uint64_t step_count(double T, double dt) {
  if (!(T > 0.0)) throw InvalidArgument("T must be positive");
  // Ratios like 100 / 2^-10 are exact; nudge only against representation error.
  return static_cast<std::uint64_t>(std::floor(T / dt * (1.0 + 1e-14)));
}

RunSummary run_trajectory(const DampedDrivenModel& model, const SchemeParams& params, PairState init,
                          double T, const std::vector<Observer>& observers) {
  params.validate();
  require_dims(init, model.dim());
  if (!init.finite()) throw InvalidArgument("initial pair state must be finite");
  const std::uint64_t steps = step_count(T, params.dt);
  const std::uint64_t tail_start = steps - steps / 10;
  Stepper stepper(model, params);

  RunSummary sum;
  sum.min_b_factor = std::numeric_limits<double>::infinity();
  PairState& s = init;
  const auto& k = simd::active();
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t i = 0; i < steps; ++i) {
    const StepInfo info = stepper.advance(s);
    const double un2 = k.dot(s.u_curr.data(), s.u_curr.data(), s.u_curr.size());
    if (!std::isfinite(un2)) diverged(s, model, params, "non-finite state");
    sum.max_u_norm = std::max(sum.max_u_norm, std::sqrt(un2));
    sum.min_b_factor = std::min(sum.min_b_factor, info.b_factor);
    if (i >= tail_start) sum.max_q_drift_tail = std::max(sum.max_q_drift_tail, std::fabs(s.q_curr - 1.0));
    if (!observers.empty()) {
      const StepView view{s.step_index, s.u_curr, s.q_curr, info.b_factor, s};
      for (const auto& obs : observers) obs(view);
    }
  }
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  sum.steps = steps;
  sum.final_state = std::move(s);
  return sum;
}

}  // namespace mrsav
