#pragma once
// Damped-driven models  du/dt + A u + N(u) = F  on R^d with symmetric
// positive-definite damping A, energy-conserving N (N(u).u = 0) and a
// time-independent forcing F.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mrsav {

using StateVector = std::vector<double>;

/// Row-major dense square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static DenseMatrix identity(std::size_t n, double scale = 1.0);

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> data() const noexcept { return data_; }

  bool is_diagonal() const noexcept;
  double max_abs() const noexcept;
  /// max_{i,j} |A_ij - A_ji|
  double symmetry_defect() const noexcept;
  void multiply(std::span<const double> x, std::span<double> out) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

enum class NonlinearKind {
  Lorenz96,  // routed through the vector kernels
  Custom,
};

/// Writes N(u) into `out` (both of length dim).
using NonlinearFn = std::function<void(std::span<const double> u, std::span<double> out)>;

/// Immutable after construction; safe to share between threads.
class DampedDrivenModel {
 public:
  /// `coercivity` <= 0 means "compute the smallest eigenvalue of A".
  DampedDrivenModel(DenseMatrix damping, NonlinearFn nonlinear, StateVector forcing,
                    double coercivity = 0.0, std::string name = "custom");

  std::size_t dim() const noexcept { return forcing_.size(); }
  const DenseMatrix& damping() const noexcept { return damping_; }
  double coercivity() const noexcept { return coercivity_; }
  std::span<const double> forcing() const noexcept { return forcing_; }
  /// ||F||, the sup over time of a constant forcing.
  double forcing_sup() const noexcept { return forcing_sup_; }
  const std::string& name() const noexcept { return name_; }
  NonlinearKind kind() const noexcept { return kind_; }

  /// N(u) into `out`; allocation-free for Lorenz 96.
  void nonlinear(std::span<const double> u, std::span<double> out) const;

 private:
  friend DampedDrivenModel lorenz96_model(int, double);

  DenseMatrix damping_;
  NonlinearFn nonlinear_;
  StateVector forcing_;
  double coercivity_ = 0.0;
  double forcing_sup_ = 0.0;
  std::string name_;
  NonlinearKind kind_ = NonlinearKind::Custom;
};

/// Lorenz 96 with J sites and constant forcing:
///   du_j/dt = (u_{j+1} - u_{j-2}) u_{j-1} - u_j + F,  periodic in j.
/// Written in damped-driven form with A = I (coercivity 1) and
/// N(u)_j = -(u_{j+1} - u_{j-2}) u_{j-1}. Requires J >= 4.
DampedDrivenModel lorenz96_model(int sites, double forcing);

/// Lorenz 96 copy with a deliberately broken nonlinearity (sign of the
/// u_{j-2} term flipped), used as a negative control.
DampedDrivenModel lorenz96_faulty_model(int sites, double forcing);

/// 1-based periodic site index -> 0-based storage slot.
constexpr std::size_t wrap_site(long long site, std::size_t sites) noexcept {
  const auto n = static_cast<long long>(sites);
  return static_cast<std::size_t>((((site - 1) % n) + n) % n);
}

StateVector eval_nonlinear(const DampedDrivenModel& model, std::span<const double> u);

struct AssumptionReport {
  std::size_t samples = 0;
  double radius = 0.0;
  /// max |N(u).u| / max(1, |u|^3)
  double max_skew_residual = 0.0;
  /// min u.Au / |u|^2
  double min_coercivity_ratio = 0.0;
  double symmetry_defect = 0.0;
  /// max |N(u)-N(v)| / |u-v| over sample pairs; a local Lipschitz estimate on the ball.
  double lipschitz_estimate = 0.0;

  bool skew_ok(double tol = 1e-12) const noexcept { return max_skew_residual <= tol; }
  bool coercivity_ok(double coercivity, double damping_norm) const noexcept;
  bool symmetry_ok(double damping_norm) const noexcept {
    return symmetry_defect <= 1e-12 * damping_norm;
  }
};

/// Samples uniform points in [-radius, radius]^dim and measures the
/// structural assumptions. Reports only; callers decide pass/fail.
AssumptionReport check_assumptions(const DampedDrivenModel& model, std::size_t samples,
                                   double radius, std::uint64_t seed);

}  // namespace mrsav
