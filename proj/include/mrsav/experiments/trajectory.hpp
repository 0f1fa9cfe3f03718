#pragma once
// One long trajectory with a histogram and moment accumulator on a single
// coordinate. Advances incrementally so callers can snapshot, checkpoint and
// resume at arbitrary step counts.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "mrsav/experiments/config.hpp"
#include "mrsav/integrators.hpp"
#include "mrsav/rng.hpp"
#include "mrsav/statistics.hpp"

namespace mrsav::experiments {

struct RunSpec {
  SchemeParams params;
  InitMode init_mode = InitMode::Refined;
  StateVector u0;
  double T = 100.0;
  std::size_t bins = 64000;
  double lo = -25.0;
  double hi = 25.0;
  int coordinate_index = 1;
  double burn_in = 0.0;
};

/// Initial state drawn from the run seed: uniform in [-init_range, init_range]^J.
/// `perturbed` multiplies each component by (1 + pct/100 * xi), xi uniform in
/// [-1, 1] from an independent stream of the same seed.
StateVector initial_state(const ExperimentConfig& cfg, bool perturbed = false);

/// RunSpec from the trajectory sections of a config.
RunSpec run_spec(const ExperimentConfig& cfg);

struct Checkpoint;

class CoordinateRun {
 public:
  CoordinateRun(std::shared_ptr<const DampedDrivenModel> model, RunSpec spec);
  CoordinateRun(const CoordinateRun&) = delete;
  CoordinateRun& operator=(const CoordinateRun&) = delete;

  /// Steps until `steps_done() == step` (clamped to the target).
  void advance_to(std::uint64_t step);
  void run_to_end() { advance_to(target_steps_); }

  /// Called after every recorded sample with (time, moments).
  void set_sample_hook(std::function<void(double, const RunningMoments&)> hook) {
    hook_ = std::move(hook);
  }

  std::uint64_t steps_done() const noexcept { return steps_done_; }
  std::uint64_t target_steps() const noexcept { return target_steps_; }
  bool finished() const noexcept { return steps_done_ >= target_steps_; }
  double time() const noexcept;

  const PairState& state() const noexcept { return state_; }
  const StreamingHistogram& histogram() const noexcept { return hist_; }
  const RunningMoments& moments() const noexcept { return moments_; }
  const RunSpec& spec() const noexcept { return spec_; }
  double max_u_norm() const noexcept { return max_u_norm_; }
  double min_b_factor() const noexcept { return min_b_; }
  double max_q_drift_tail() const noexcept { return max_q_tail_; }
  double wall_seconds() const noexcept { return wall_seconds_; }

  Checkpoint checkpoint(std::uint64_t config_hash, const std::string& rng_state) const;
  void restore(const Checkpoint& ck);

 private:
  std::shared_ptr<const DampedDrivenModel> model_;
  RunSpec spec_;
  Stepper stepper_;
  PairState state_;
  StreamingHistogram hist_;
  RunningMoments moments_;
  std::uint64_t steps_done_ = 0;
  std::uint64_t target_steps_ = 0;
  std::uint64_t tail_start_ = 0;
  std::uint64_t first_recorded_ = 0;
  double max_u_norm_ = 0.0;
  double min_b_ = 0.0;
  double max_q_tail_ = 0.0;
  double wall_seconds_ = 0.0;
  std::function<void(double, const RunningMoments&)> hook_;
};

}  // namespace mrsav::experiments
