#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <span>
#include <vector>

#include "mrsav/model.hpp"

namespace mrsav {

/// The fixed operator M = mass*I + dt*A of one scheme, factored once and
/// reused for every right-hand side. mass is 3/2 for BDF2 and 1 for
/// backward Euler. Diagonal A takes an elementwise fast path; otherwise M is
/// Cholesky-factored. Immutable after construction.
class LinearSolveCache {
 public:
  LinearSolveCache(const DampedDrivenModel& model, double dt, double mass, double gamma);

  std::size_t dim() const noexcept { return dim_; }
  double dt() const noexcept { return dt_; }
  double mass() const noexcept { return mass_; }
  bool diagonal() const noexcept { return diagonal_; }

  /// (mass + dt*gamma)^-1, the scalar counterpart of M^-1 in the q update.
  double scalar_prefactor() const noexcept { return scalar_prefactor_; }
  /// M^-1 F
  std::span<const double> forcing_image() const noexcept { return forcing_image_; }

  /// out = M^-1 rhs. `out` may alias `rhs`.
  void solve(std::span<const double> rhs, std::span<double> out) const;
  /// out = M x
  void apply(std::span<const double> x, std::span<double> out) const;

  /// |M (M^-1 x) - x| / |x|
  double identity_residual(std::span<const double> x) const;

 private:
  std::size_t dim_ = 0;
  double dt_ = 0.0;
  double mass_ = 0.0;
  double scalar_prefactor_ = 0.0;
  bool diagonal_ = false;
  std::vector<double> diag_;      // diagonal of M
  std::vector<double> inv_diag_;  // fast path
  Eigen::MatrixXd operator_;      // dense path
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<double> forcing_image_;
};

}  // namespace mrsav
