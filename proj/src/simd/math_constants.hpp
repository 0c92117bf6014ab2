#pragma once

// Polynomial coefficients shared by the scalar and vector transcendental
// kernels (fdlibm minimax sets for log on [sqrt(1/2), sqrt(2)) and sin/cos on
// [-pi/4, pi/4]).

#include <cstdint>

namespace dbql::simd::detail {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;

inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;

inline constexpr double kHalfPi = 1.57079632679489661923;

inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ULL;
inline constexpr std::uint64_t kMantissaMask = 0x000FFFFFFFFFFFFFULL;
// 2^52 as a double; OR-ing a small integer into its mantissa and subtracting
// recovers the integer exactly.
inline constexpr std::uint64_t kMagic52Bits = 0x4330000000000000ULL;
inline constexpr double kMagic52 = 4503599627370496.0;

}  // namespace dbql::simd::detail
