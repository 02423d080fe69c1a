#pragma once

#include "slowfast/types.hpp"

#include <array>
#include <cstdint>

namespace slowfast {

// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

// Uniform on the 2^52-point midpoint grid of (0, 1) from two 32-bit words.
double uniform_from_words(std::uint32_t hi, std::uint32_t lo);

// Sequential counter-based stream, used for everything that is not a Wiener
// increment (probes, Monte Carlo sampling, bootstrap indices, slice directions).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  double uniform();  // (0, 1)
  double normal();
  std::size_t index(std::size_t n);  // uniform in [0, n)

 private:
  std::uint32_t next_word();

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Source of Wiener increments for one trajectory, addressed by step index.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  // Fills out with independent N(0, h) increments for the given step.
  virtual void increments(std::uint64_t step, double h, OutSpan out) const = 0;
};

// Increments keyed by (seed, trajectory, step, component). Independent of
// evaluation order, so paths are reproducible under any schedule.
// Requires step < 2^48 and fewer than 2^17 components.
class CounterNoise final : public NoiseSource {
 public:
  CounterNoise(std::uint64_t seed, std::uint64_t trajectory);
  void normals(std::uint64_t step, OutSpan out) const;
  void increments(std::uint64_t step, double h, OutSpan out) const override;

 private:
  PhiloxKey key_;
  std::uint32_t traj_lo_;
  std::uint32_t traj_hi_;
};

// Coarse increments built by summing `factor` consecutive fine increments, so
// runs at step h and h/factor see the same Brownian path.
class AggregatedNoise final : public NoiseSource {
 public:
  AggregatedNoise(const NoiseSource& fine, unsigned factor);
  void increments(std::uint64_t step, double h, OutSpan out) const override;

 private:
  const NoiseSource& fine_;
  unsigned factor_;
};

}  // namespace slowfast
