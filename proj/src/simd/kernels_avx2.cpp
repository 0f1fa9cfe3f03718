// Compiled with -mavx2 only (no FMA) so that elementwise results match the
// scalar reference bit for bit.
#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace mrsav::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sw = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpby_avx2(double a, const double* x, double b, const double* y, double* out,
                std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)),
                              _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void mul_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void l96_nonlinear_avx2(const double* u, double* out, std::size_t n) {
  out[0] = (u[n - 2] - u[1]) * u[n - 1];
  out[1] = (u[n - 1] - u[2]) * u[0];
  std::size_t j = 2;
  // Interior slots j with j+1 <= n-2 need no wrap; a 4-wide block at j reads up to u[j+4].
  for (; j + 5 <= n; j += 4) {
    __m256d um2 = _mm256_loadu_pd(u + j - 2);
    __m256d um1 = _mm256_loadu_pd(u + j - 1);
    __m256d up1 = _mm256_loadu_pd(u + j + 1);
    _mm256_storeu_pd(out + j, _mm256_mul_pd(_mm256_sub_pd(um2, up1), um1));
  }
  for (; j + 1 < n; ++j) out[j] = (u[j - 2] - u[j + 1]) * u[j - 1];
  out[n - 1] = (u[n - 3] - u[0]) * u[n - 2];
}

double sum_abs_diff_avx2(const double* x, const double* y, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign, d1));
  }
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign, d));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

constexpr Kernels kAvx2{Isa::Avx2,        "avx2",     dot_avx2,         axpby_avx2,
                        mul_avx2,         l96_nonlinear_avx2, sum_abs_diff_avx2};

}  // namespace

namespace detail {
const Kernels* avx2_kernels() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace mrsav::simd
