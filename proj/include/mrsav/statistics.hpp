#pragma once
// Empirical-measure machinery: fixed-range histograms filled online,
// normalized probability vectors, and distances between them.
//
// Conventions: entropies in nats; TV = 1/2 sum |p - q| (so TV is in [0, 1]
// and Pinsker reads TV <= sqrt(KL / 2)).

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mrsav/error.hpp"

namespace mrsav {

class ProbVector {
 public:
  ProbVector() = default;
  /// Validates nonnegativity and sum 1 +- 1e-12. `lo`/`hi` record the support.
  ProbVector(std::vector<double> p, double lo, double hi);
  /// Divides nonnegative weights by their sum.
  static ProbVector from_weights(std::span<const double> weights, double lo, double hi);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double bin_center(std::size_t i) const noexcept;
  /// Compensated sum of the entries.
  double mass() const noexcept;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  ProbVector(std::vector<double> p, double lo, double hi, bool /*unchecked*/)
      : p_(std::move(p)), lo_(lo), hi_(hi) {}
  friend ProbVector coarsen(const ProbVector&, std::size_t);
  friend ProbVector refine(const ProbVector&, std::size_t);

  std::vector<double> p_;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

/// Equal-width bins on [lo, hi] with out-of-range tail counters.
class StreamingHistogram {
 public:
  StreamingHistogram() = default;
  StreamingHistogram(double lo, double hi, std::size_t bins);

  /// bin floor((x - lo) / width); x == hi lands in the last bin.
  void push(double x) {
    if (std::isnan(x)) throw InvalidArgument("histogram sample is NaN");
    ++total_;
    if (x < lo_) {
      ++under_;
      return;
    }
    if (x > hi_) {
      ++over_;
      return;
    }
    auto idx = static_cast<std::size_t>((x - lo_) / width_);
    if (idx >= counts_.size()) idx = counts_.size() - 1;
    ++counts_[idx];
  }

  /// Adds another histogram with identical layout.
  void merge(const StreamingHistogram& other);

  bool same_layout(const StreamingHistogram& other) const noexcept {
    return lo_ == other.lo_ && hi_ == other.hi_ && counts_.size() == other.counts_.size();
  }

  /// include_tails folds under/over into the first/last bin and divides by
  /// total; otherwise divides the in-range counts by their sum.
  ProbVector normalize(bool include_tails) const;

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t bins() const noexcept { return counts_.size(); }
  double bin_width() const noexcept { return width_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t under() const noexcept { return under_; }
  std::uint64_t over() const noexcept { return over_; }
  std::uint64_t total() const noexcept { return total_; }
  double tail_fraction() const noexcept {
    return total_ ? static_cast<double>(under_ + over_) / static_cast<double>(total_) : 0.0;
  }

  /// Rebuilds from stored counts (checkpoint restore). Checks the count invariant.
  static StreamingHistogram restore(double lo, double hi, std::vector<std::uint64_t> counts,
                                    std::uint64_t under, std::uint64_t over, std::uint64_t total);

  friend bool operator==(const StreamingHistogram&, const StreamingHistogram&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  double width_ = 1.0;
  std::vector<std::uint64_t> counts_;
  std::uint64_t under_ = 0;
  std::uint64_t over_ = 0;
  std::uint64_t total_ = 0;
};

/// Single-pass mean and population variance (Welford), mergeable (Chan et al.).
class RunningMoments {
 public:
  void push(double x) noexcept {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  void merge(const RunningMoments& other) noexcept;

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }
  double variance() const noexcept { return count_ ? m2_ / static_cast<double>(count_) : 0.0; }

  static RunningMoments restore(std::uint64_t count, double mean, double m2) noexcept {
    RunningMoments m;
    m.count_ = count;
    m.mean_ = mean;
    m.m2_ = m2;
    return m;
  }

  friend bool operator==(const RunningMoments&, const RunningMoments&) = default;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// sum p log(p/q); 0 log(0/q) = 0, and p > 0 with q = 0 gives +infinity.
double kl_divergence(const ProbVector& p, const ProbVector& q);
/// Symmetrized KL against the midpoint mixture; always in [0, ln 2].
double js_divergence(const ProbVector& p, const ProbVector& q);
/// 1/2 sum |p - q|
double tv_distance(const ProbVector& p, const ProbVector& q);

struct DistanceReport {
  double js = 0.0;
  double kl_pq = 0.0;
  double kl_qp = 0.0;
  double tv = 0.0;
  /// tv <= sqrt(kl_pq / 2), vacuous when kl_pq is infinite.
  bool pinsker_ok = true;
};

DistanceReport compare(const ProbVector& p, const ProbVector& q);

/// Centered boxcar of odd width; edge windows are truncated and averaged
/// over the bins they cover; the result is renormalized.
ProbVector moving_average(const ProbVector& p, std::size_t window);

/// Sums adjacent groups of `factor` bins.
ProbVector coarsen(const ProbVector& p, std::size_t factor);

/// Spreads each bin uniformly over `factor` sub-bins (piecewise-constant density).
ProbVector refine(const ProbVector& p, std::size_t factor);

/// Orders between consecutive rungs of a ratio-2 ladder:
/// order_i = log2(e_i / e_{i+1}). Zero or non-finite errors give nullopt.
/// Throws InvalidArgument if params are not a geometric ladder with ratio 2
/// (either direction).
std::vector<std::optional<double>> observed_order(
    std::span<const std::pair<double, double>> param_error);

/// Least-squares slope of log(error) against log(param), used for
/// self-convergence studies where param is the step size.
double fitted_slope(std::span<const std::pair<double, double>> param_error);

}  // namespace mrsav
