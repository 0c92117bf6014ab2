#include <cstdlib>
#include <string>

#include "dbql/errors.hpp"
#include "kernels_impl.hpp"

namespace dbql::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(DBQL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select_default() {
  const char* forced = std::getenv("DBQL_SIMD");
  if (forced != nullptr) {
    const std::string want(forced);
    if (want == "scalar") return detail::scalar_table();
    if (want == "avx2") return kernels(Isa::avx2);
  }
  if (available(Isa::avx2)) return kernels(Isa::avx2);
  return detail::scalar_table();
}

}  // namespace

bool available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (isa == Isa::scalar) return detail::scalar_table();
#if defined(DBQL_HAVE_AVX2)
  if (cpu_has_avx2()) return detail::avx2_table();
#endif
  throw UnsupportedConfiguration("kernel variant not available: " +
                                 std::string(isa_name(isa)));
}

const KernelTable& kernels() {
  static const KernelTable& chosen = select_default();
  return chosen;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace dbql::simd
