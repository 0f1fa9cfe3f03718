#pragma once

#include "mrsav/simd/kernels.hpp"

namespace mrsav::simd::detail {

// Defined only when the AVX2 translation unit is compiled in.
const Kernels* avx2_kernels() noexcept;

}  // namespace mrsav::simd::detail
