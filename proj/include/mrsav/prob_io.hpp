#pragma once
// Portable storage for probability vectors.
//
// Binary container, all fields little-endian:
//   bytes 0-7   magic "MRSAVPRB"
//   u32         format version (1)
//   u64         N
//   f64         lo
//   f64         hi
//   N x f64     probabilities
//
// CSV: header "bin_center,probability", one row per bin, 17 significant digits.

#include <filesystem>
#include <string>

#include "mrsav/statistics.hpp"

namespace mrsav {

inline constexpr char kProbMagic[8] = {'M', 'R', 'S', 'A', 'V', 'P', 'R', 'B'};
inline constexpr std::uint32_t kProbVersion = 1;

std::string encode_prob(const ProbVector& p);
ProbVector decode_prob(const std::string& bytes);

void write_prob_binary(const std::filesystem::path& path, const ProbVector& p);
ProbVector read_prob_binary(const std::filesystem::path& path);
void write_prob_csv(const std::filesystem::path& path, const ProbVector& p);

}  // namespace mrsav
