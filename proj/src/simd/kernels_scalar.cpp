#include <cmath>

#include "mrsav/simd/kernels.hpp"

namespace mrsav::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpby_scalar(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void mul_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void l96_nonlinear_scalar(const double* u, double* out, std::size_t n) {
  // Wrapped slots first, then the contiguous interior.
  out[0] = (u[n - 2] - u[1]) * u[n - 1];
  out[1] = (u[n - 1] - u[2]) * u[0];
  for (std::size_t j = 2; j + 1 < n; ++j) out[j] = (u[j - 2] - u[j + 1]) * u[j - 1];
  out[n - 1] = (u[n - 3] - u[0]) * u[n - 2];
}

double sum_abs_diff_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

constexpr Kernels kScalar{Isa::Scalar,         "scalar",     dot_scalar,         axpby_scalar,
                          mul_scalar,          l96_nonlinear_scalar, sum_abs_diff_scalar};

}  // namespace

const Kernels& scalar_kernels() noexcept { return kScalar; }

}  // namespace mrsav::simd
