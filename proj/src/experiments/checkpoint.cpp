#include "mrsav/experiments/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "mrsav/byte_io.hpp"
#include "mrsav/error.hpp"

namespace mrsav::experiments {

namespace {
constexpr char kMagic[8] = {'M', 'R', 'S', 'A', 'V', 'C', 'K', 'P'};
}

std::string encode_checkpoint(const Checkpoint& ck) {
  bytes::Writer w;
  w.raw(std::string_view(kMagic, 8));
  w.u32(ck.version);
  w.u64(ck.config_hash);
  w.u64(ck.steps_done);
  w.u64(ck.target_steps);
  const auto& s = ck.state;
  w.u64(s.u_curr.size());
  for (double x : s.u_prev) w.f64(x);
  for (double x : s.u_curr) w.f64(x);
  w.f64(s.q_prev);
  w.f64(s.q_curr);
  w.u64(s.step_index);
  const auto& h = ck.histogram;
  w.f64(h.lo());
  w.f64(h.hi());
  w.u64(h.bins());
  for (auto c : h.counts()) w.u64(c);
  w.u64(h.under());
  w.u64(h.over());
  w.u64(h.total());
  w.u64(ck.moments.count());
  w.f64(ck.moments.mean());
  w.f64(ck.moments.m2());
  w.f64(ck.max_u_norm);
  w.f64(ck.min_b_factor);
  w.f64(ck.max_q_drift_tail);
  w.str(ck.rng_algorithm);
  w.str(ck.rng_state);
  w.str(ck.isa);
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& data) {
  bytes::Reader r(data);
  if (r.raw(8) != std::string_view(kMagic, 8)) throw IoError("not a checkpoint file");
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != kCheckpointVersion)
    throw IoError("checkpoint format version " + std::to_string(ck.version) +
                  " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  ck.config_hash = r.u64();
  ck.steps_done = r.u64();
  ck.target_steps = r.u64();
  const auto dim = r.u64();
  if (dim > r.remaining() / 16) throw IoError("corrupt checkpoint: state dimension");
  ck.state.u_prev.resize(dim);
  ck.state.u_curr.resize(dim);
  for (auto& x : ck.state.u_prev) x = r.f64();
  for (auto& x : ck.state.u_curr) x = r.f64();
  ck.state.q_prev = r.f64();
  ck.state.q_curr = r.f64();
  ck.state.step_index = r.u64();
  const double lo = r.f64();
  const double hi = r.f64();
  const auto n = r.u64();
  if (n > r.remaining() / 8) throw IoError("corrupt checkpoint: histogram size");
  std::vector<std::uint64_t> counts(n);
  for (auto& c : counts) c = r.u64();
  const auto under = r.u64();
  const auto over = r.u64();
  const auto total = r.u64();
  try {
    ck.histogram = StreamingHistogram::restore(lo, hi, std::move(counts), under, over, total);
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("corrupt checkpoint: ") + e.what());
  }
  const auto count = r.u64();
  const double mean = r.f64();
  const double m2 = r.f64();
  ck.moments = RunningMoments::restore(count, mean, m2);
  ck.max_u_norm = r.f64();
  ck.min_b_factor = r.f64();
  ck.max_q_drift_tail = r.f64();
  ck.rng_algorithm = r.str();
  ck.rng_state = r.str();
  ck.isa = r.str();
  if (!r.done()) throw IoError("corrupt checkpoint: trailing bytes");
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp + " for writing");
    const auto s = encode_checkpoint(ck);
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!os) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename checkpoint into place: " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace mrsav::experiments
