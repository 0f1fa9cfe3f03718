#pragma once
// Binary checkpoint of a CoordinateRun, little-endian:
//   "MRSAVCKP", u32 version, u64 config hash, u64 steps done, u64 target steps,
//   pair state (u64 dim, u_prev, u_curr, q_prev, q_curr, u64 step index),
//   histogram (lo, hi, u64 N, N x u64 counts, under, over, total),
//   moments (u64 count, mean, m2), run accumulators (max|u|, min B, max|q-1| tail),
//   strings: RNG algorithm, RNG state, kernel ISA.
// A version mismatch is rejected, never reinterpreted.

#include <cstdint>
#include <filesystem>
#include <string>

#include "mrsav/integrators.hpp"
#include "mrsav/statistics.hpp"

namespace mrsav::experiments {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t steps_done = 0;
  std::uint64_t target_steps = 0;
  PairState state;
  StreamingHistogram histogram;
  RunningMoments moments;
  double max_u_norm = 0.0;
  double min_b_factor = 0.0;
  double max_q_drift_tail = 0.0;
  std::string rng_algorithm;
  std::string rng_state;
  std::string isa;
};

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::string& bytes);

/// Written to a temporary file and renamed, so a crash never leaves a torn checkpoint.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace mrsav::experiments
