#include "mrsav/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mrsav/error.hpp"
#include "mrsav/rng.hpp"
#include "mrsav/simd/kernels.hpp"

namespace mrsav {

DenseMatrix DenseMatrix::identity(std::size_t n, double scale) {
  DenseMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

bool DenseMatrix::is_diagonal() const noexcept {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (i != j && (*this)(i, j) != 0.0) return false;
  return true;
}

double DenseMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

double DenseMatrix::symmetry_defect() const noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) d = std::max(d, std::fabs((*this)(i, j) - (*this)(j, i)));
  return d;
}

void DenseMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_ || out.size() != n_) throw DimensionError("matrix-vector size mismatch");
  const auto& k = simd::active();
  for (std::size_t i = 0; i < n_; ++i) out[i] = k.dot(data_.data() + i * n_, x.data(), n_);
}

namespace {

double smallest_eigenvalue(const DenseMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = 0.5 * (a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
                       a(static_cast<std::size_t>(j), static_cast<std::size_t>(i)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double norm2(std::span<const double> v) { return std::sqrt(simd::active().dot(v.data(), v.data(), v.size())); }

}  // namespace

DampedDrivenModel::DampedDrivenModel(DenseMatrix damping, NonlinearFn nonlinear, StateVector forcing,
                                     double coercivity, std::string name)
    : damping_(std::move(damping)),
      nonlinear_(std::move(nonlinear)),
      forcing_(std::move(forcing)),
      name_(std::move(name)) {
  if (forcing_.empty()) throw DimensionError("model dimension must be positive");
  if (damping_.size() != forcing_.size())
    throw DimensionError("damping is " + std::to_string(damping_.size()) + "x" +
                         std::to_string(damping_.size()) + " but forcing has length " +
                         std::to_string(forcing_.size()));
  for (double f : forcing_)
    if (!std::isfinite(f)) throw InvalidArgument("forcing must be finite");
  for (double a : damping_.data())
    if (!std::isfinite(a)) throw InvalidArgument("damping must be finite");
  if (!nonlinear_) throw InvalidArgument("nonlinear term is empty");
  coercivity_ = coercivity > 0.0 ? coercivity : smallest_eigenvalue(damping_);
  if (!(coercivity_ > 0.0)) throw InvalidArgument("damping operator is not positive definite");
  forcing_sup_ = norm2(forcing_);
}

void DampedDrivenModel::nonlinear(std::span<const double> u, std::span<double> out) const {
  if (kind_ == NonlinearKind::Lorenz96) {
    simd::active().l96_nonlinear(u.data(), out.data(), u.size());
    return;
  }
  nonlinear_(u, out);
}

DampedDrivenModel lorenz96_model(int sites, double forcing) {
  if (sites < 4)
    throw DimensionError("Lorenz 96 needs J >= 4 sites so that j-2, j-1, j+1 are distinct; got " +
                         std::to_string(sites));
  const auto n = static_cast<std::size_t>(sites);
  auto fn = [](std::span<const double> u, std::span<double> out) {
    simd::scalar_kernels().l96_nonlinear(u.data(), out.data(), u.size());
  };
  DampedDrivenModel m(DenseMatrix::identity(n), fn, StateVector(n, forcing), 1.0,
                      "lorenz96(J=" + std::to_string(sites) + ")");
  m.kind_ = NonlinearKind::Lorenz96;
  return m;
}

DampedDrivenModel lorenz96_faulty_model(int sites, double forcing) {
  if (sites < 4) throw DimensionError("Lorenz 96 needs J >= 4 sites");
  const auto n = static_cast<std::size_t>(sites);
  auto fn = [n](std::span<const double> u, std::span<double> out) {
    for (std::size_t j = 0; j < n; ++j)
      out[j] = -(u[(j + 1) % n] + u[(j + n - 2) % n]) * u[(j + n - 1) % n];
  };
  return DampedDrivenModel(DenseMatrix::identity(n), fn, StateVector(n, forcing), 1.0,
                           "lorenz96-faulty(J=" + std::to_string(sites) + ")");
}

StateVector eval_nonlinear(const DampedDrivenModel& model, std::span<const double> u) {
  if (u.size() != model.dim())
    throw DimensionError("state has length " + std::to_string(u.size()) + ", model dim is " +
                         std::to_string(model.dim()));
  StateVector out(u.size());
  model.nonlinear(u, out);
  return out;
}

bool AssumptionReport::coercivity_ok(double coercivity, double damping_norm) const noexcept {
  return min_coercivity_ratio >= coercivity - 1e-10 * damping_norm;
}

AssumptionReport check_assumptions(const DampedDrivenModel& model, std::size_t samples, double radius,
                                   std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("samples must be >= 1");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const std::size_t d = model.dim();
  Rng rng(seed);
  AssumptionReport r;
  r.samples = samples;
  r.radius = radius;
  r.symmetry_defect = model.damping().symmetry_defect();
  r.min_coercivity_ratio = std::numeric_limits<double>::infinity();

  StateVector u(d), v(d), nu(d), nv(d), au(d), diff(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& x : u) x = rng.uniform(-radius, radius);
    for (auto& x : v) x = rng.uniform(-radius, radius);
    model.nonlinear(u, nu);
    model.nonlinear(v, nv);
    const double un = norm2(u);
    double nudotu = 0.0;
    for (std::size_t i = 0; i < d; ++i) nudotu += nu[i] * u[i];
    r.max_skew_residual = std::max(r.max_skew_residual, std::fabs(nudotu) / std::max(1.0, un * un * un));

    model.damping().multiply(u, au);
    double uau = 0.0;
    for (std::size_t i = 0; i < d; ++i) uau += u[i] * au[i];
    if (un > 0.0) r.min_coercivity_ratio = std::min(r.min_coercivity_ratio, uau / (un * un));

    for (std::size_t i = 0; i < d; ++i) diff[i] = u[i] - v[i];
    const double du = norm2(diff);
    for (std::size_t i = 0; i < d; ++i) diff[i] = nu[i] - nv[i];
    if (du > 0.0) r.lipschitz_estimate = std::max(r.lipschitz_estimate, norm2(diff) / du);
  }
  return r;
}

}  // namespace mrsav
