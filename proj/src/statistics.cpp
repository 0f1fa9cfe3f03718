#include "mrsav/statistics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "mrsav/simd/kernels.hpp"

namespace mrsav {
namespace {

double neumaier_sum(std::span<const double> v) noexcept {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void require_same_length(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size())
    throw DimensionError("distributions have " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()) + " bins");
}

}  // namespace

ProbVector::ProbVector(std::vector<double> p, double lo, double hi)
    : p_(std::move(p)), lo_(lo), hi_(hi) {
  if (p_.empty()) throw InvalidArgument("probability vector is empty");
  if (!(lo_ < hi_)) throw InvalidArgument("probability vector support needs lo < hi");
  for (double x : p_)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw InvalidArgument("probability entries must be finite and nonnegative");
  const double m = neumaier_sum(p_);
  if (std::fabs(m - 1.0) > 1e-12)
    throw InvalidArgument("probabilities sum to " + std::to_string(m) + ", not 1");
}

ProbVector ProbVector::from_weights(std::span<const double> weights, double lo, double hi) {
  const double total = neumaier_sum(weights);
  if (!(total > 0.0)) throw InvalidArgument("weights have no mass");
  std::vector<double> p(weights.begin(), weights.end());
  for (auto& x : p) x /= total;
  return ProbVector(std::move(p), lo, hi);
}

double ProbVector::bin_center(std::size_t i) const noexcept {
  const double w = (hi_ - lo_) / static_cast<double>(p_.size());
  return lo_ + (static_cast<double>(i) + 0.5) * w;
}

double ProbVector::mass() const noexcept { return neumaier_sum(p_); }

StreamingHistogram::StreamingHistogram(double lo, double hi, std::size_t bins)
    : lo_(lo), hi_(hi), counts_(bins, 0) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("histogram range needs finite lo < hi");
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  width_ = (hi - lo) / static_cast<double>(bins);
}

void StreamingHistogram::merge(const StreamingHistogram& other) {
  if (!same_layout(other)) throw DimensionError("cannot merge histograms with different layouts");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  under_ += other.under_;
  over_ += other.over_;
  total_ += other.total_;
}

ProbVector StreamingHistogram::normalize(bool include_tails) const {
  if (total_ == 0) throw InvalidArgument("cannot normalize an empty histogram");
  std::vector<double> p(counts_.size());
  std::uint64_t denom = total_ - under_ - over_;
  for (std::size_t i = 0; i < counts_.size(); ++i) p[i] = static_cast<double>(counts_[i]);
  if (include_tails) {
    p.front() += static_cast<double>(under_);
    p.back() += static_cast<double>(over_);
    denom = total_;
  }
  if (denom == 0) throw InvalidArgument("histogram has no in-range samples");
  const double d = static_cast<double>(denom);
  for (auto& x : p) x /= d;
  return ProbVector(std::move(p), lo_, hi_);
}

StreamingHistogram StreamingHistogram::restore(double lo, double hi, std::vector<std::uint64_t> counts,
                                               std::uint64_t under, std::uint64_t over,
                                               std::uint64_t total) {
  StreamingHistogram h(lo, hi, counts.size());
  std::uint64_t sum = under + over;
  for (auto c : counts) sum += c;
  if (sum != total) throw InvalidArgument("histogram counts do not add up to the stored total");
  h.counts_ = std::move(counts);
  h.under_ = under;
  h.over_ = over;
  h.total_ = total;
  return h;
}

void RunningMoments::merge(const RunningMoments& other) noexcept {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  count_ += other.count_;
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative value for p ~ q.
  return std::max(s, 0.0);
}

double js_divergence(const ProbVector& p, const ProbVector& q) {
  require_same_length(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i], b = q[i];
    if (a == b) continue;
    const double m = 0.5 * (a + b);
    double term_a = a > 0.0 ? a * std::log(a / m) : 0.0;
    double term_b = b > 0.0 ? b * std::log(b / m) : 0.0;
    // Summed per bin so that swapping p and q is exact.
    s += term_a + term_b;
  }
  return std::clamp(0.5 * s, 0.0, std::numbers::ln2);
}

double tv_distance(const ProbVector& p, const ProbVector& q) {
  require_same_length(p, q);
  const double s = simd::active().sum_abs_diff(p.values().data(), q.values().data(), p.size());
  return std::min(0.5 * s, 1.0);
}

DistanceReport compare(const ProbVector& p, const ProbVector& q) {
  DistanceReport r;
  r.js = js_divergence(p, q);
  r.kl_pq = kl_divergence(p, q);
  r.kl_qp = kl_divergence(q, p);
  r.tv = tv_distance(p, q);
  r.pinsker_ok = !std::isfinite(r.kl_pq) || r.tv <= std::sqrt(r.kl_pq / 2.0) + 1e-15;
  return r;
}

ProbVector moving_average(const ProbVector& p, std::size_t window) {
  if (window == 0 || window % 2 == 0)
    throw InvalidArgument("moving-average window must be odd and positive, got " +
                          std::to_string(window));
  const std::size_t n = p.size();
  if (window > n) throw InvalidArgument("moving-average window exceeds the number of bins");
  if (window == 1) return p;
  // Half-sample symmetric reflection at the edges: bin -1 mirrors bin 0.
  // Mass is preserved and constants are fixed points.
  const auto h = static_cast<long long>(window / 2);
  const auto nn = static_cast<long long>(n);
  auto at = [&](long long i) {
    if (i < 0) i = -i - 1;
    if (i >= nn) i = 2 * nn - i - 1;
    return p[static_cast<std::size_t>(i)];
  };
  std::vector<double> out(n);
  const double inv = 1.0 / static_cast<double>(window);
  for (long long i = 0; i < nn; ++i) {
    double s = 0.0;
    for (long long j = i - h; j <= i + h; ++j) s += at(j);
    out[static_cast<std::size_t>(i)] = s * inv;
  }
  return ProbVector::from_weights(out, p.lo(), p.hi());
}

ProbVector coarsen(const ProbVector& p, std::size_t factor) {
  if (factor == 0 || p.size() % factor != 0)
    throw InvalidArgument("cannot coarsen " + std::to_string(p.size()) + " bins by factor " +
                          std::to_string(factor));
  if (factor == 1) return p;
  std::vector<double> out(p.size() / factor, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[i / factor] += p[i];
  return ProbVector(std::move(out), p.lo(), p.hi(), true);
}

ProbVector refine(const ProbVector& p, std::size_t factor) {
  if (factor == 0) throw InvalidArgument("refine factor must be positive");
  if (factor == 1) return p;
  std::vector<double> out(p.size() * factor);
  const double inv = 1.0 / static_cast<double>(factor);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i / factor] * inv;
  return ProbVector(std::move(out), p.lo(), p.hi(), true);
}

std::vector<std::optional<double>> observed_order(
    std::span<const std::pair<double, double>> param_error) {
  std::vector<std::optional<double>> out;
  if (param_error.size() < 2) return out;
  const double r0 = param_error[1].first / param_error[0].first;
  if (!(std::fabs(r0 - 2.0) <= 1e-9 * 2.0 || std::fabs(r0 - 0.5) <= 1e-9 * 0.5))
    throw InvalidArgument("ladder is not geometric with ratio 2");
  for (std::size_t i = 0; i + 1 < param_error.size(); ++i) {
    const double r = param_error[i + 1].first / param_error[i].first;
    if (std::fabs(r - r0) > 1e-9 * r0) throw InvalidArgument("ladder is not geometric with ratio 2");
    const double a = param_error[i].second, b = param_error[i + 1].second;
    if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b))
      out.emplace_back(std::log2(a / b));
    else
      out.emplace_back(std::nullopt);
  }
  return out;
}

double fitted_slope(std::span<const std::pair<double, double>> param_error) {
  if (param_error.size() < 2) throw InvalidArgument("need at least two points for a slope");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(param_error.size());
  for (const auto& [x, y] : param_error) {
    if (!(x > 0.0) || !(y > 0.0)) throw InvalidArgument("slope fit needs positive values");
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mrsav
