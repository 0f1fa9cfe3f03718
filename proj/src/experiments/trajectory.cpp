#include "mrsav/experiments/trajectory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mrsav/error.hpp"
#include "mrsav/experiments/checkpoint.hpp"
#include "mrsav/simd/kernels.hpp"

namespace mrsav::experiments {

StateVector initial_state(const ExperimentConfig& cfg, bool perturbed) {
  Rng rng(cfg.run.seed);
  StateVector u(static_cast<std::size_t>(cfg.model.sites));
  for (auto& x : u) x = rng.uniform(-cfg.run.init_range, cfg.run.init_range);
  if (perturbed) {
    Rng xi(cfg.run.seed ^ 0x9e3779b97f4a7c15ull);
    const double amp = cfg.run.perturbation_pct / 100.0;
    for (auto& x : u) x *= 1.0 + amp * xi.uniform(-1.0, 1.0);
  }
  return u;
}

RunSpec run_spec(const ExperimentConfig& cfg) {
  RunSpec s;
  s.params = cfg.scheme_params();
  s.init_mode = cfg.scheme.init_mode;
  s.u0 = initial_state(cfg);
  s.T = cfg.run.T;
  s.bins = cfg.histogram.bins;
  s.lo = cfg.histogram.lo;
  s.hi = cfg.histogram.hi;
  s.coordinate_index = cfg.histogram.coordinate_index;
  s.burn_in = cfg.run.burn_in;
  return s;
}

CoordinateRun::CoordinateRun(std::shared_ptr<const DampedDrivenModel> model, RunSpec spec)
    : model_(std::move(model)),
      spec_(std::move(spec)),
      stepper_(*model_, spec_.params),
      state_(init_pair(spec_.u0, spec_.init_mode, *model_, spec_.params)),
      hist_(spec_.lo, spec_.hi, spec_.bins) {
  if (spec_.coordinate_index < 1 || static_cast<std::size_t>(spec_.coordinate_index) > model_->dim())
    throw InvalidArgument("coordinate index out of range");
  target_steps_ = step_count(spec_.T, spec_.params.dt);
  tail_start_ = target_steps_ - target_steps_ / 10;
  min_b_ = std::numeric_limits<double>::infinity();
}

double CoordinateRun::time() const noexcept {
  return static_cast<double>(state_.step_index) * spec_.params.dt;
}

void CoordinateRun::advance_to(std::uint64_t step) {
  step = std::min(step, target_steps_);
  if (step <= steps_done_) return;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t c = static_cast<std::size_t>(spec_.coordinate_index - 1);
  const auto& k = simd::active();
  const std::size_t d = state_.u_curr.size();
  const double dt = spec_.params.dt;
  for (; steps_done_ < step; ++steps_done_) {
    const StepInfo info = stepper_.advance(state_);
    const double un2 = k.dot(state_.u_curr.data(), state_.u_curr.data(), d);
    if (!std::isfinite(un2))
      throw DivergenceError(state_.step_index, std::numeric_limits<double>::quiet_NaN(),
                            "non-finite state");
    max_u_norm_ = std::max(max_u_norm_, std::sqrt(un2));
    min_b_ = std::min(min_b_, info.b_factor);
    if (steps_done_ >= tail_start_) max_q_tail_ = std::max(max_q_tail_, std::fabs(state_.q_curr - 1.0));
    const double t = static_cast<double>(state_.step_index) * dt;
    if (t < spec_.burn_in) continue;
    const double x = state_.u_curr[c];
    hist_.push(x);
    moments_.push(x);
    if (hook_) hook_(t, moments_);
  }
  wall_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Checkpoint CoordinateRun::checkpoint(std::uint64_t config_hash, const std::string& rng_state) const {
  Checkpoint ck;
  ck.config_hash = config_hash;
  ck.steps_done = steps_done_;
  ck.target_steps = target_steps_;
  ck.state = state_;
  ck.histogram = hist_;
  ck.moments = moments_;
  ck.max_u_norm = max_u_norm_;
  ck.min_b_factor = min_b_;
  ck.max_q_drift_tail = max_q_tail_;
  ck.rng_algorithm = Rng::kAlgorithm;
  ck.rng_state = rng_state;
  ck.isa = simd::active().name;
  return ck;
}

void CoordinateRun::restore(const Checkpoint& ck) {
  if (ck.target_steps != target_steps_)
    throw InvalidArgument("checkpoint was taken for a run of a different length");
  if (ck.state.u_curr.size() != model_->dim()) throw DimensionError("checkpoint state dimension mismatch");
  if (!ck.histogram.same_layout(hist_)) throw InvalidArgument("checkpoint histogram layout mismatch");
  if (ck.isa != simd::active().name)
    throw InvalidArgument("checkpoint was written with the " + ck.isa + " kernels but this process uses " +
                          simd::active().name + "; set MRSAV_SIMD to match");
  state_ = ck.state;
  hist_ = ck.histogram;
  moments_ = ck.moments;
  steps_done_ = ck.steps_done;
  max_u_norm_ = ck.max_u_norm;
  min_b_ = ck.min_b_factor;
  max_q_tail_ = ck.max_q_drift_tail;
}

}  // namespace mrsav::experiments
