// Portable reference kernels. The AVX2 file mirrors these operation by
// operation; keep the two in lockstep.

#include <bit>
#include <cmath>
#include <cstring>

#include "kernels_impl.hpp"
#include "math_constants.hpp"

namespace dbql::simd::detail {
namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// Advances every lane once and writes the four raw outputs.
inline void step(LaneState& st, std::uint64_t out[4]) {
  auto& s = st.words;
  for (int l = 0; l < 4; ++l) {
    out[l] = s[0][l] + s[3][l];
    const std::uint64_t t = s[1][l] << 17;
    s[2][l] ^= s[0][l];
    s[3][l] ^= s[1][l];
    s[1][l] ^= s[2][l];
    s[0][l] ^= s[3][l];
    s[2][l] ^= t;
    s[3][l] = rotl(s[3][l], 45);
  }
}

// [1, 2) with 52 random mantissa bits.
inline double one_two(std::uint64_t r) {
  return std::bit_cast<double>((r >> 12) | kOneBits);
}

inline double log_reduced(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const double kd =
      std::bit_cast<double>((bits >> 52) | kMagic52Bits) - kMagic52;
  double k = kd - 1023.0;
  double m = std::bit_cast<double>((bits & kMantissaMask) | kOneBits);
  if (m > kSqrt2) {
    m = m * 0.5;
    k = k + 1.0;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double r = t2 + t1;
  const double hfsq = 0.5 * f * f;
  return k * kLn2Hi - ((hfsq - (s * (hfsq + r) + k * kLn2Lo)) - f);
}

inline double sin_kernel(double x, double z) {
  return x + x * (z * (kS1 + z * (kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6))))));
}

inline double cos_kernel(double z) {
  return 1.0 - (0.5 * z - z * z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6))))));
}

void fill_uniform01(LaneState& st, double* out, std::size_t n_blocks) {
  std::uint64_t r[4];
  for (std::size_t b = 0; b < n_blocks; ++b) {
    step(st, r);
    for (int l = 0; l < 4; ++l) out[4 * b + l] = one_two(r[l]) - 1.0;
  }
}

void fill_std_normal(LaneState& st, double* out, std::size_t n_blocks) {
  std::uint64_t r1[4];
  std::uint64_t r2[4];
  for (std::size_t b = 0; b < n_blocks; ++b) {
    step(st, r1);
    step(st, r2);
    double* blk = out + 8 * b;
    for (int l = 0; l < 4; ++l) {
      const double u1 = 2.0 - one_two(r1[l]);  // (0, 1]
      const double u2 = one_two(r2[l]) - 1.0;  // [0, 1)
      const double radius = std::sqrt(log_reduced(u1) * -2.0);
      const double w4 = u2 * 4.0;
      const double q = std::nearbyint(w4);
      const double x = (w4 - q) * kHalfPi;
      const double z = x * x;
      const double sx = sin_kernel(x, z);
      const double cx = cos_kernel(z);
      double c = cx;
      double s = sx;
      if (q == 1.0) {
        c = -sx;
        s = cx;
      } else if (q == 2.0) {
        c = -cx;
        s = -sx;
      } else if (q == 3.0) {
        c = sx;
        s = -cx;
      }
      blk[l] = radius * c;
      blk[4 + l] = radius * s;
    }
  }
}

void affine_matvec(const double* m, std::size_t rows, std::size_t cols,
                   const double* x, const double* offset, double scale,
                   double* out) {
  const std::size_t cols4 = cols - cols % 4;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < cols4; j += 4) {
      for (int k = 0; k < 4; ++k) acc[k] = acc[k] + row[j + k] * x[j + k];
    }
    double dot = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (std::size_t j = cols4; j < cols; ++j) dot = dot + row[j] * x[j];
    out[i] = offset[i] + scale * dot;
  }
}

void soft_update(double* v, const double* target, std::size_t n, double alpha) {
  const double keep = 1.0 - alpha;
  for (std::size_t i = 0; i < n; ++i) v[i] = keep * v[i] + alpha * target[i];
}

void max_floor(double* v, const double* floor, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = v[i] < floor[i] ? floor[i] : v[i];
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{Isa::scalar,   "scalar",    &fill_uniform01,
                                 &fill_std_normal, &affine_matvec, &soft_update,
                                 &max_floor};
  return table;
}

}  // namespace dbql::simd::detail
