#pragma once
// Seedable generator with a fixed, documented algorithm. The standard
// distributions are implementation-defined, so uniforms are built directly
// from the raw 64-bit output to keep draws identical across platforms.

#include <cstdint>
#include <random>
#include <string>

namespace mrsav {

class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/uniform53";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t next_u64() { return engine_(); }

  /// Engine state as text (std::mt19937_64 stream format, which the
  /// standard fully specifies).
  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mrsav
