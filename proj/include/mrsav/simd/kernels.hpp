#pragma once
// Vector kernels used on the hot paths of the stepper and the distance
// computations. Every kernel has a scalar reference implementation; wider
// variants are selected at runtime from what the CPU reports.
//
// Elementwise kernels (axpby, mul, l96_nonlinear) are bitwise identical
// across variants. Reductions (dot, sum_abs_diff) differ only by summation
// order, so trajectories are reproducible bit-for-bit only on the same ISA.
// Set MRSAV_SIMD=scalar to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mrsav::simd {

enum class Isa { Scalar, Avx2 };

struct Kernels {
  Isa isa;
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out = a*x + b*y
  void (*axpby)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  // out = x .* y
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // out_j = (u_{j-2} - u_{j+1}) * u_{j-1}, indices modulo n. Requires n >= 4.
  void (*l96_nonlinear)(const double* u, double* out, std::size_t n);
  // sum_i |x_i - y_i|
  double (*sum_abs_diff)(const double* x, const double* y, std::size_t n);
};

const Kernels& scalar_kernels() noexcept;

/// True when the variant is compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Kernels for a specific variant; falls back to scalar if unavailable.
const Kernels& kernels(Isa isa) noexcept;

/// Best available variant, honoring the MRSAV_SIMD override
/// ("scalar", "avx2", "auto"). Resolved once per process.
const Kernels& active() noexcept;

/// Names of all variants usable on this machine, scalar first.
std::vector<Isa> available_isas();

std::string_view isa_name(Isa isa) noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

}  // namespace mrsav::simd
