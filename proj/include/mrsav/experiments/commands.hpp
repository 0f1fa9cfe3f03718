#pragma once
// Experiment commands behind the CLI. Each returns its results as values and
// writes its artifacts (CSV tables, JSON summaries, binary distributions)
// into the output directory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsav/error.hpp"
#include "mrsav/experiments/config.hpp"
#include "mrsav/statistics.hpp"

namespace mrsav::experiments {

/// A checked property of a run or model did not hold (CLI exit code 2).
class InvariantFailure : public Error {
 public:
  using Error::Error;
};

/// A table command needs a reference that has not been built.
class MissingReference : public Error {
 public:
  using Error::Error;
};

struct CommandOptions {
  std::filesystem::path output_dir = "mrsav-out";
  int jobs = 1;
  /// Wall-clock seconds between checkpoints of `run`; 0 disables periodic checkpoints.
  double checkpoint_interval = 0.0;
  std::optional<std::filesystem::path> resume;
  /// Stop `run` after this many steps and leave a checkpoint (for resumable batch jobs).
  std::optional<std::uint64_t> halt_at_step;
  std::ostream* log = nullptr;
};

struct RunArtifacts {
  std::uint64_t steps = 0;
  std::uint64_t target_steps = 0;
  bool halted = false;
  StreamingHistogram histogram;
  RunningMoments moments;
  double max_q_drift_tail = 0.0;
  double max_u_norm = 0.0;
  double min_b_factor = 0.0;
  double wall_seconds = 0.0;
  std::filesystem::path checkpoint_path;
};

RunArtifacts cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts);

struct ReferenceArtifacts {
  ProbVector distribution;
  RunningMoments moments;
  std::uint64_t hash = 0;
  std::filesystem::path prob_path;
  std::filesystem::path meta_path;
};

/// Config of the reference trajectory: the run with reference T, dt and bins.
ExperimentConfig reference_config(const ExperimentConfig& cfg);
std::filesystem::path reference_path(const ExperimentConfig& cfg, const std::filesystem::path& out);

ReferenceArtifacts cmd_make_reference(const ExperimentConfig& cfg, const CommandOptions& opts);
/// Throws MissingReference if no stored reference matches the config.
ReferenceArtifacts load_reference(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct TableRow {
  double param = 0.0;
  double js = 0.0;
  std::optional<double> order_js;
  double tv = 0.0;
  std::optional<double> order_tv;
};

struct Table {
  std::string name;        // file stem
  std::string param_name;  // "T", "N" or "dt"
  std::vector<TableRow> rows;
  nlohmann::json provenance;
};

/// Fills the order columns from the distance columns.
void fill_orders(Table& t);

Table cmd_table_terminal_time(const ExperimentConfig& cfg, const CommandOptions& opts);
Table cmd_table_bins(const ExperimentConfig& cfg, const CommandOptions& opts);
Table cmd_table_dt(const ExperimentConfig& cfg, const CommandOptions& opts);
Table cmd_table_initial_data(const ExperimentConfig& cfg, const CommandOptions& opts);

/// Distance of an N-bin histogram to the smoothed full-resolution one: the
/// coarse histogram is spread back to full resolution as a piecewise-constant
/// density and compared against the moving average of the original.
DistanceReport bin_resolution_distance(const ProbVector& full, const ProbVector& smoothed,
                                       std::size_t bins);

/// Tracks the last time a running statistic violated a relative threshold.
class EntryTracker {
 public:
  EntryTracker(double reference, double threshold) : ref_(reference), threshold_(threshold) {}
  void observe(double t, double value) noexcept {
    const bool ok = std::abs(value - ref_) < threshold_ * std::abs(ref_);
    if (!ok) violated_at_ = t;
    if (ok && !inside_) entered_at_ = t;
    inside_ = ok;
  }
  /// First time after which every later observation stayed below the threshold.
  std::optional<double> entry_time() const noexcept {
    if (!inside_) return std::nullopt;
    return entered_at_;
  }
  std::optional<double> last_violation() const noexcept { return violated_at_; }

 private:
  double ref_;
  double threshold_;
  bool inside_ = false;
  double entered_at_ = 0.0;
  std::optional<double> violated_at_;
};

struct SchemeComparison {
  std::string scheme;
  double dt = 0.0;
  std::optional<double> mean_entry_T;
  std::optional<double> variance_entry_T;
  double final_mean = 0.0;
  double final_variance = 0.0;
};

struct ComparisonReport {
  double threshold = 0.0;
  double reference_mean = 0.0;
  double reference_variance = 0.0;
  double T = 0.0;
  std::vector<SchemeComparison> schemes;  // backward Euler first, then BDF2
};

ComparisonReport cmd_compare_orders(const ExperimentConfig& cfg, const CommandOptions& opts);

struct InvariantResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::optional<double> threshold;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantResult> results;
  bool all_pass() const noexcept {
    for (const auto& r : results)
      if (!r.pass) return false;
    return true;
  }
};

/// Runs the model, solver, energy and auxiliary-variable checks with the
/// BDF2 scheme at the configured dt and gamma. Never throws for a failed
/// check; failures are entries in the report.
InvariantReport cmd_check_invariants(const ExperimentConfig& cfg, const CommandOptions& opts);

}  // namespace mrsav::experiments
