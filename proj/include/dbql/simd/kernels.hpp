#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference and,
// where the target supports it, an AVX2 variant chosen at runtime. Variants
// are bit-identical: both evaluate the same operation sequence with no fused
// multiply-add, so results never depend on the host CPU.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace dbql::simd {

enum class Isa { scalar, avx2 };

// Four interleaved xoshiro256+ generators; words[w][lane].
struct alignas(32) LaneState {
  std::uint64_t words[4][4];
};

struct KernelTable {
  Isa isa;
  std::string_view name;

  // 4 values in [0, 1) per block, lane-major within the block.
  void (*fill_uniform01)(LaneState& st, double* out, std::size_t n_blocks);
  // 8 standard normals per block (Box-Muller: 4 cosine then 4 sine branch).
  void (*fill_std_normal)(LaneState& st, double* out, std::size_t n_blocks);
  // out[i] = offset[i] + scale * dot(m[i, :], x), m row-major rows x cols.
  void (*affine_matvec)(const double* m, std::size_t rows, std::size_t cols,
                        const double* x, const double* offset, double scale,
                        double* out);
  // v[i] = (1 - alpha) * v[i] + alpha * target[i]
  void (*soft_update)(double* v, const double* target, std::size_t n,
                      double alpha);
  // v[i] = max(v[i], floor[i])
  void (*max_floor)(double* v, const double* floor, std::size_t n);
};

bool available(Isa isa) noexcept;

// Runtime choice: the widest available ISA unless the environment variable
// DBQL_SIMD is set to "scalar" or "avx2".
const KernelTable& kernels();

// Explicit variant, for equivalence tests. Throws UnsupportedConfiguration
// when the variant was not compiled in or the CPU lacks it.
const KernelTable& kernels(Isa isa);

std::string_view isa_name(Isa isa) noexcept;

}  // namespace dbql::simd
