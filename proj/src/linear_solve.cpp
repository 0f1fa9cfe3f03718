#include "mrsav/linear_solve.hpp"

#include <cmath>

#include "mrsav/error.hpp"
#include "mrsav/simd/kernels.hpp"

namespace mrsav {

LinearSolveCache::LinearSolveCache(const DampedDrivenModel& model, double dt, double mass,
                                   double gamma)
    : dim_(model.dim()), dt_(dt), mass_(mass) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive and finite");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  scalar_prefactor_ = 1.0 / (mass + dt * gamma);
  const DenseMatrix& a = model.damping();
  diagonal_ = a.is_diagonal();
  if (diagonal_) {
    diag_.resize(dim_);
    inv_diag_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      diag_[i] = mass + dt * a(i, i);
      inv_diag_[i] = 1.0 / diag_[i];
    }
  } else {
    const auto n = static_cast<Eigen::Index>(dim_);
    operator_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        operator_(i, j) = dt * a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
                          (i == j ? mass : 0.0);
    llt_.compute(operator_);
    if (llt_.info() != Eigen::Success)
      throw InvalidArgument("mass*I + dt*A is not positive definite; the damping must be SPD");
  }
  forcing_image_.resize(dim_);
  solve(model.forcing(), forcing_image_);
}

void LinearSolveCache::solve(std::span<const double> rhs, std::span<double> out) const {
  if (diagonal_) {
    simd::active().mul(inv_diag_.data(), rhs.data(), out.data(), dim_);
    return;
  }
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  Eigen::Map<Eigen::VectorXd> x(out.data(), n);
  x = llt_.solve(b);
}

void LinearSolveCache::apply(std::span<const double> x, std::span<double> out) const {
  if (diagonal_) {
    simd::active().mul(diag_.data(), x.data(), out.data(), dim_);
    return;
  }
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  Eigen::Map<Eigen::VectorXd> y(out.data(), n);
  y = operator_ * xv;
}

double LinearSolveCache::identity_residual(std::span<const double> x) const {
  std::vector<double> y(dim_), z(dim_);
  solve(x, y);
  apply(y, z);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    num += (z[i] - x[i]) * (z[i] - x[i]);
    den += x[i] * x[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace mrsav
