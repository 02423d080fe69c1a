#include "slowfast/noise.hpp"

#include <cmath>
#include <vector>

namespace slowfast {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline std::uint32_t lo32(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
inline std::uint32_t hi32(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }

inline void box_muller(double u1, double u2, double& z1, double& z2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  z1 = r * std::cos(a);
  z2 = r * std::sin(a);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

double uniform_from_words(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t x = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(x) + 0.5) * 0x1.0p-52;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_{lo32(seed), hi32(seed)}, stream_(stream) {}

std::uint32_t CounterRng::next_word() {
  if (used_ == 4) {
    buffer_ = philox4x32({lo32(counter_), hi32(counter_), lo32(stream_), hi32(stream_)}, key_);
    ++counter_;
    used_ = 0;
  }
  return buffer_[used_++];
}

double CounterRng::uniform() {
  const std::uint32_t hi = next_word();
  const std::uint32_t lo = next_word();
  return uniform_from_words(hi, lo);
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  double z1, z2;
  box_muller(u1, u2, z1, z2);
  spare_ = z2;
  has_spare_ = true;
  return z1;
}

std::size_t CounterRng::index(std::size_t n) {
  if (n == 0) throw PreconditionError("CounterRng::index: empty range");
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

CounterNoise::CounterNoise(std::uint64_t seed, std::uint64_t trajectory)
    : key_{lo32(seed), hi32(seed)}, traj_lo_(lo32(trajectory)), traj_hi_(hi32(trajectory)) {}

void CounterNoise::normals(std::uint64_t step, OutSpan out) const {
  const std::uint32_t step_lo = lo32(step);
  const std::uint32_t step_hi = hi32(step) & 0xFFFFu;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto block = static_cast<std::uint32_t>(i / 2);
    const PhiloxCounter r =
        philox4x32({step_lo, step_hi | (block << 16), traj_lo_, traj_hi_}, key_);
    double z1, z2;
    box_muller(uniform_from_words(r[0], r[1]), uniform_from_words(r[2], r[3]), z1, z2);
    out[i] = z1;
    if (i + 1 < out.size()) out[i + 1] = z2;
  }
}

void CounterNoise::increments(std::uint64_t step, double h, OutSpan out) const {
  normals(step, out);
  const double s = std::sqrt(h);
  for (double& x : out) x *= s;
}

AggregatedNoise::AggregatedNoise(const NoiseSource& fine, unsigned factor)
    : fine_(fine), factor_(factor) {
  if (factor == 0) throw PreconditionError("AggregatedNoise: factor must be >= 1");
}

void AggregatedNoise::increments(std::uint64_t step, double h, OutSpan out) const {
  std::vector<double> buf(out.size());
  for (double& x : out) x = 0.0;
  const double hf = h / factor_;
  for (unsigned r = 0; r < factor_; ++r) {
    fine_.increments(step * factor_ + r, hf, buf);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += buf[i];
  }
}

}  // namespace slowfast
