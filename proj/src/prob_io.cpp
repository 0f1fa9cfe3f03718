#include "mrsav/prob_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mrsav/byte_io.hpp"

namespace mrsav {

std::string encode_prob(const ProbVector& p) {
  bytes::Writer w;
  w.raw(std::string_view(kProbMagic, 8));
  w.u32(kProbVersion);
  w.u64(p.size());
  w.f64(p.lo());
  w.f64(p.hi());
  for (double x : p.values()) w.f64(x);
  return w.take();
}

ProbVector decode_prob(const std::string& data) {
  bytes::Reader r(data);
  if (r.raw(8) != std::string_view(kProbMagic, 8)) throw IoError("not a probability-vector file");
  const auto version = r.u32();
  if (version != kProbVersion)
    throw IoError("unsupported probability-vector version " + std::to_string(version));
  const auto n = r.u64();
  const double lo = r.f64();
  const double hi = r.f64();
  if (r.remaining() != n * 8) throw IoError("probability-vector payload size mismatch");
  std::vector<double> p(n);
  for (auto& x : p) x = r.f64();
  return ProbVector(std::move(p), lo, hi);
}

void write_prob_binary(const std::filesystem::path& path, const ProbVector& p) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const auto s = encode_prob(p);
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

ProbVector read_prob_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_prob(ss.str());
}

void write_prob_csv(const std::filesystem::path& path, const ProbVector& p) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "bin_center,probability\n";
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.bin_center(i), p[i]);
    os << buf;
  }
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace mrsav
