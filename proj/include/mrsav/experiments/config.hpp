#pragma once
// Experiment configuration. Stored as JSON; every key is optional and
// defaults to the desk-scale Lorenz 96 setup (J=5, F=-12, gamma=1000,
// dt=2^-10, 64000 bins on [-25, 25], coordinate 1).
//
// Step sizes may be written as numbers or as strings of the form "2^-10".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsav/integrators.hpp"
#include "mrsav/model.hpp"

namespace mrsav::experiments {

struct ModelConfig {
  int sites = 5;
  double forcing = -12.0;
  /// "none" or "nonlinear-sign-flip" (negative control for check-invariants).
  std::string fault = "none";
};

struct SchemeConfig {
  SchemeOrder order = SchemeOrder::Bdf2;
  double dt = 0x1.0p-10;
  double gamma = 1000.0;
  InitMode init_mode = InitMode::Refined;
};

struct RunConfig {
  double T = 100.0;
  std::uint64_t seed = 42;
  /// Initial components drawn uniformly from [-init_range, init_range].
  double init_range = 15.0;
  /// Percent amplitude of the componentwise perturbation for initial-data studies.
  double perturbation_pct = 5.0;
  /// Samples before this time are not recorded.
  double burn_in = 0.0;
};

struct HistogramConfig {
  std::size_t bins = 64000;
  double lo = -25.0;
  double hi = 25.0;
  /// 1-based site index of the recorded coordinate.
  int coordinate_index = 1;
  bool include_tails = false;
  /// Runs whose out-of-range fraction exceeds this fail.
  double max_tail_fraction = 1e-4;
};

struct ReferenceConfig {
  /// Explicit reference file; empty means the content-addressed name in the output directory.
  std::string path;
  double T = 102400.0;
  double dt = 0x1.0p-10;
  std::size_t bins = 64000;
  /// Long-run moments of the recorded coordinate (compare-orders).
  std::optional<double> mean = -2.30785305840738;
  std::optional<double> variance = 22.3539129577942;
};

struct TablesConfig {
  std::vector<double> T_ladder{100, 200, 400, 800, 1600, 3200, 6400, 12800};
  std::vector<std::size_t> bin_ladder{125, 250, 500, 1000, 2000, 4000, 8000, 16000, 32000};
  std::vector<double> dt_ladder{0x1.0p-7, 0x1.0p-8, 0x1.0p-9, 0x1.0p-10};
  /// Reference step for table-dt; 0 means the smallest ladder entry.
  double dt_reference = 0x1.0p-12;
  double dt_T = 10000.0;
  std::size_t moving_average_window = 5;
  double threshold = 0.01;
  double compare_T = 200000.0;
};

struct OutputConfig {
  std::string directory;  // empty: $MRSAV_OUTPUT_ROOT, then ./mrsav-out
  std::vector<std::string> formats{"csv", "json"};
};

struct ExperimentConfig {
  ModelConfig model;
  SchemeConfig scheme;
  RunConfig run;
  HistogramConfig histogram;
  ReferenceConfig reference;
  TablesConfig tables;
  OutputConfig output;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Applies "section.key=value"; value is parsed as JSON, falling back to a string.
  void set(const std::string& assignment);

  /// FNV-1a over the canonical JSON of every section except output.
  std::uint64_t hash() const;

  SchemeParams scheme_params() const;
  DampedDrivenModel build_model() const;
  bool wants_format(const std::string& f) const;
};

/// Parses a step size: a JSON number or a string "2^-k" / "2^k".
double parse_step(const nlohmann::json& v, const std::string& field);

std::string hex64(std::uint64_t v);
std::uint64_t fnv1a64(const std::string& s);

/// Output root: explicit, then config, then $MRSAV_OUTPUT_ROOT, then ./mrsav-out.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const std::string& flag);

}  // namespace mrsav::experiments
