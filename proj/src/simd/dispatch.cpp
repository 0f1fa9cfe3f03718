#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace mrsav::simd {

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MRSAV_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const Kernels& kernels(Isa isa) noexcept {
#if defined(MRSAV_HAVE_AVX2)
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return *detail::avx2_kernels();
#endif
  (void)isa;
  return scalar_kernels();
}

namespace {

const Kernels& resolve() noexcept {
  const char* env = std::getenv("MRSAV_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2") return kernels(Isa::Avx2);
  if (isa_available(Isa::Avx2)) return kernels(Isa::Avx2);
  return scalar_kernels();
}

}  // namespace

const Kernels& active() noexcept {
  static const Kernels& k = resolve();
  return k;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  if (isa_available(Isa::Avx2)) out.push_back(Isa::Avx2);
  return out;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace mrsav::simd
