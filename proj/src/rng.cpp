#include "dbql/rng.hpp"

#include <algorithm>
#include <bit>

#include "dbql/errors.hpp"

namespace dbql {

std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 1));
}

RandomStream::RandomStream(std::uint64_t seed)
    : RandomStream(seed, simd::kernels()) {}

RandomStream::RandomStream(std::uint64_t seed, const simd::KernelTable& kernels)
    : kernels_(&kernels) {
  std::uint64_t x = seed;
  for (int lane = 0; lane < 4; ++lane) {
    for (int w = 0; w < 4; ++w) {
      state_.words[w][lane] = mix64(x);
      x += 0x9E3779B97F4A7C15ULL;
    }
  }
}

void RandomStream::refill_raw() {
  // One lockstep advance, same recurrence as the block kernels.
  auto& s = state_.words;
  for (int l = 0; l < 4; ++l) {
    raw_[l] = s[0][l] + s[3][l];
    const std::uint64_t t = s[1][l] << 17;
    s[2][l] ^= s[0][l];
    s[3][l] ^= s[1][l];
    s[1][l] ^= s[2][l];
    s[0][l] ^= s[3][l];
    s[2][l] ^= t;
    s[3][l] = (s[3][l] << 45) | (s[3][l] >> 19);
  }
  raw_pos_ = 0;
}

std::uint64_t RandomStream::next_u64() {
  if (raw_pos_ == 4) refill_raw();
  return raw_[raw_pos_++];
}

double RandomStream::uniform01() {
  return std::bit_cast<double>((next_u64() >> 12) | 0x3FF0000000000000ULL) - 1.0;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  require(n > 0, "below: n must be positive");
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RandomStream::normal() {
  if (normal_pos_ == 8) {
    kernels_->fill_std_normal(state_, normals_.data(), 1);
    normal_pos_ = 0;
  }
  return normals_[normal_pos_++];
}

void RandomStream::fill_uniform01(std::span<double> out) {
  const std::size_t full = out.size() / 4;
  kernels_->fill_uniform01(state_, out.data(), full);
  const std::size_t rest = out.size() - 4 * full;
  if (rest != 0) {
    double tail[4];
    kernels_->fill_uniform01(state_, tail, 1);
    std::copy_n(tail, rest, out.data() + 4 * full);
  }
}

void RandomStream::fill_uniform(std::span<double> out, double lo, double hi) {
  fill_uniform01(out);
  const double width = hi - lo;
  for (double& v : out) v = lo + width * v;
}

void RandomStream::fill_std_normal(std::span<double> out) {
  const std::size_t full = out.size() / 8;
  kernels_->fill_std_normal(state_, out.data(), full);
  const std::size_t rest = out.size() - 8 * full;
  if (rest != 0) {
    double tail[8];
    kernels_->fill_std_normal(state_, tail, 1);
    std::copy_n(tail, rest, out.data() + 8 * full);
  }
}

void RandomStream::fill_normal(std::span<double> out, double sigma) {
  fill_std_normal(out);
  for (double& v : out) v *= sigma;
}

}  // namespace dbql
