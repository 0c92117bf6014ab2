// AVX2 variants of the reference kernels in kernels_scalar.cpp. Compiled with
// -mavx2 only (no -mfma) so every product and sum rounds exactly as in the
// scalar code.

#include <immintrin.h>

#include "kernels_impl.hpp"
#include "math_constants.hpp"

namespace dbql::simd::detail {
namespace {

struct Lanes {
  __m256i s0, s1, s2, s3;
};

inline Lanes load(const LaneState& st) {
  return {_mm256_load_si256(reinterpret_cast<const __m256i*>(st.words[0])),
          _mm256_load_si256(reinterpret_cast<const __m256i*>(st.words[1])),
          _mm256_load_si256(reinterpret_cast<const __m256i*>(st.words[2])),
          _mm256_load_si256(reinterpret_cast<const __m256i*>(st.words[3]))};
}

inline void store(LaneState& st, const Lanes& s) {
  _mm256_store_si256(reinterpret_cast<__m256i*>(st.words[0]), s.s0);
  _mm256_store_si256(reinterpret_cast<__m256i*>(st.words[1]), s.s1);
  _mm256_store_si256(reinterpret_cast<__m256i*>(st.words[2]), s.s2);
  _mm256_store_si256(reinterpret_cast<__m256i*>(st.words[3]), s.s3);
}

inline __m256i step(Lanes& s) {
  const __m256i result = _mm256_add_epi64(s.s0, s.s3);
  const __m256i t = _mm256_slli_epi64(s.s1, 17);
  s.s2 = _mm256_xor_si256(s.s2, s.s0);
  s.s3 = _mm256_xor_si256(s.s3, s.s1);
  s.s1 = _mm256_xor_si256(s.s1, s.s2);
  s.s0 = _mm256_xor_si256(s.s0, s.s3);
  s.s2 = _mm256_xor_si256(s.s2, t);
  s.s3 = _mm256_or_si256(_mm256_slli_epi64(s.s3, 45), _mm256_srli_epi64(s.s3, 19));
  return result;
}

inline __m256d one_two(__m256i r) {
  const __m256i one = _mm256_set1_epi64x(static_cast<long long>(kOneBits));
  return _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(r, 12), one));
}

inline __m256d log_reduced(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i magic = _mm256_set1_epi64x(static_cast<long long>(kMagic52Bits));
  const __m256d kd = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(bits, 52), magic)),
      _mm256_set1_pd(kMagic52));
  __m256d k = _mm256_sub_pd(kd, _mm256_set1_pd(1023.0));
  const __m256i mant = _mm256_and_si256(
      bits, _mm256_set1_epi64x(static_cast<long long>(kMantissaMask)));
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
      mant, _mm256_set1_epi64x(static_cast<long long>(kOneBits))));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  k = _mm256_blendv_pd(k, _mm256_add_pd(k, _mm256_set1_pd(1.0)), big);

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  auto c = [](double v) { return _mm256_set1_pd(v); };
  const __m256d t1 = _mm256_mul_pd(
      w, _mm256_add_pd(c(kLg2), _mm256_mul_pd(w, _mm256_add_pd(c(kLg4), _mm256_mul_pd(w, c(kLg6))))));
  const __m256d t2 = _mm256_mul_pd(
      z, _mm256_add_pd(
             c(kLg1),
             _mm256_mul_pd(w, _mm256_add_pd(
                                  c(kLg3), _mm256_mul_pd(w, _mm256_add_pd(
                                                              c(kLg5), _mm256_mul_pd(w, c(kLg7))))))));
  const __m256d r = _mm256_add_pd(t2, t1);
  const __m256d hfsq = _mm256_mul_pd(_mm256_mul_pd(c(0.5), f), f);
  const __m256d inner = _mm256_add_pd(_mm256_mul_pd(s, _mm256_add_pd(hfsq, r)),
                                      _mm256_mul_pd(k, c(kLn2Lo)));
  return _mm256_sub_pd(_mm256_mul_pd(k, c(kLn2Hi)),
                       _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline __m256d poly6(__m256d z, double a1, double a2, double a3, double a4,
                     double a5, double a6) {
  auto c = [](double v) { return _mm256_set1_pd(v); };
  __m256d p = _mm256_mul_pd(z, c(a6));
  p = _mm256_mul_pd(z, _mm256_add_pd(c(a5), p));
  p = _mm256_mul_pd(z, _mm256_add_pd(c(a4), p));
  p = _mm256_mul_pd(z, _mm256_add_pd(c(a3), p));
  p = _mm256_mul_pd(z, _mm256_add_pd(c(a2), p));
  return _mm256_add_pd(c(a1), p);
}

void fill_uniform01(LaneState& st, double* out, std::size_t n_blocks) {
  Lanes s = load(st);
  const __m256d one = _mm256_set1_pd(1.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const __m256d u = _mm256_sub_pd(one_two(step(s)), one);
    _mm256_storeu_pd(out + 4 * b, u);
  }
  store(st, s);
}

void fill_std_normal(LaneState& st, double* out, std::size_t n_blocks) {
  Lanes s = load(st);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const __m256d u1 = _mm256_sub_pd(two, one_two(step(s)));
    const __m256d u2 = _mm256_sub_pd(one_two(step(s)), one);
    const __m256d radius =
        _mm256_sqrt_pd(_mm256_mul_pd(log_reduced(u1), _mm256_set1_pd(-2.0)));
    const __m256d w4 = _mm256_mul_pd(u2, _mm256_set1_pd(4.0));
    const __m256d q = _mm256_round_pd(w4, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d x = _mm256_mul_pd(_mm256_sub_pd(w4, q), _mm256_set1_pd(kHalfPi));
    const __m256d z = _mm256_mul_pd(x, x);
    // sin: x + x * (z * P(z)) with P = S1 + z*(S2 + ...)
    const __m256d ps = poly6(z, kS1, kS2, kS3, kS4, kS5, kS6);
    const __m256d sx = _mm256_add_pd(x, _mm256_mul_pd(x, _mm256_mul_pd(z, ps)));
    const __m256d pc = poly6(z, kC1, kC2, kC3, kC4, kC5, kC6);
    const __m256d cx = _mm256_sub_pd(
        one, _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(0.5), z),
                           _mm256_mul_pd(_mm256_mul_pd(z, z), pc)));
    const __m256d nsx = _mm256_xor_pd(sx, sign);
    const __m256d ncx = _mm256_xor_pd(cx, sign);
    const __m256d q1 = _mm256_cmp_pd(q, one, _CMP_EQ_OQ);
    const __m256d q2 = _mm256_cmp_pd(q, two, _CMP_EQ_OQ);
    const __m256d q3 = _mm256_cmp_pd(q, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
    __m256d c = cx;
    __m256d sn = sx;
    c = _mm256_blendv_pd(c, nsx, q1);
    sn = _mm256_blendv_pd(sn, cx, q1);
    c = _mm256_blendv_pd(c, ncx, q2);
    sn = _mm256_blendv_pd(sn, nsx, q2);
    c = _mm256_blendv_pd(c, sx, q3);
    sn = _mm256_blendv_pd(sn, ncx, q3);
    _mm256_storeu_pd(out + 8 * b, _mm256_mul_pd(radius, c));
    _mm256_storeu_pd(out + 8 * b + 4, _mm256_mul_pd(radius, sn));
  }
  store(st, s);
}

void affine_matvec(const double* m, std::size_t rows, std::size_t cols,
                   const double* x, const double* offset, double scale,
                   double* out) {
  const std::size_t cols4 = cols - cols % 4;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < cols4; j += 4) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(row + j),
                                             _mm256_loadu_pd(x + j)));
    }
    const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc),
                                    _mm256_extractf128_pd(acc, 1));
    double dot = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
    for (std::size_t j = cols4; j < cols; ++j) dot = dot + row[j] * x[j];
    out[i] = offset[i] + scale * dot;
  }
}

void soft_update(double* v, const double* target, std::size_t n, double alpha) {
  const double keep_s = 1.0 - alpha;
  const __m256d keep = _mm256_set1_pd(keep_s);
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(keep, _mm256_loadu_pd(v + i)),
                                    _mm256_mul_pd(a, _mm256_loadu_pd(target + i)));
    _mm256_storeu_pd(v + i, r);
  }
  for (; i < n; ++i) v[i] = keep_s * v[i] + alpha * target[i];
}

void max_floor(double* v, const double* floor, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // MAXPD picks its first operand when it compares greater, else the second.
    _mm256_storeu_pd(v + i, _mm256_max_pd(_mm256_loadu_pd(floor + i),
                                          _mm256_loadu_pd(v + i)));
  }
  for (; i < n; ++i) v[i] = v[i] < floor[i] ? floor[i] : v[i];
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{Isa::avx2,       "avx2",         &fill_uniform01,
                                 &fill_std_normal, &affine_matvec, &soft_update,
                                 &max_floor};
  return table;
}

}  // namespace dbql::simd::detail
