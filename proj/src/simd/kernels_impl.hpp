#pragma once

#include "dbql/simd/kernels.hpp"

namespace dbql::simd::detail {

const KernelTable& scalar_table() noexcept;
#if defined(DBQL_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

}  // namespace dbql::simd::detail
