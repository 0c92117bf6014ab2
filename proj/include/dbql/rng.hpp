#pragma once

// Seeded random streams.
//
// A RandomStream is four interleaved xoshiro256+ generators (Blackman and
// Vigna) driven in lockstep so whole blocks can be produced by the vector
// kernels. Seeding: a splitmix64 sequence started at the user seed fills the
// 16 state words lane by lane (lane 0 words 0..3, then lane 1, ...).
//
//   uniform01   (raw >> 12) as the mantissa of a double in [1, 2), minus 1
//   normal      Box-Muller on a pair of uniform blocks: u1 in (0, 1] from the
//               first block, angle 2*pi*u2 from the second; one block yields
//               8 normals (4 cosine-branch, then 4 sine-branch)
//   below(n)    Lemire's multiply-shift with rejection on the raw 64-bit output
//
// Everything is specified down to the bit, so a seed reproduces the same
// stream on any platform and with either kernel variant.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "dbql/simd/kernels.hpp"

namespace dbql {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Per-run seed for run `index` of an experiment seeded with `master`:
// mix64(master ^ mix64(index + 1)).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  RandomStream(std::uint64_t seed, const simd::KernelTable& kernels);

  std::uint64_t next_u64();
  double uniform01();
  // Integer uniformly distributed in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();

  // Block fills. Sizes that are not a multiple of the block length consume a
  // whole trailing block, so the stream position depends only on the sequence
  // of (call, size) pairs.
  void fill_uniform01(std::span<double> out);
  void fill_uniform(std::span<double> out, double lo, double hi);
  void fill_std_normal(std::span<double> out);
  void fill_normal(std::span<double> out, double sigma);

 private:
  void refill_raw();

  simd::LaneState state_{};
  const simd::KernelTable* kernels_;
  std::array<std::uint64_t, 4> raw_{};
  std::size_t raw_pos_ = 4;
  std::array<double, 8> normals_{};
  std::size_t normal_pos_ = 8;
};

}  // namespace dbql
