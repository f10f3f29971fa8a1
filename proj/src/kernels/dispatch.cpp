#include "grove/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace grove::kernels {

#if defined(GROVE_HAVE_AVX2)
namespace detail {
const KernelSet& avx2_set();
}
#endif

const KernelSet* avx2_kernels() {
#if defined(GROVE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  if (supported) return &detail::avx2_set();
#endif
  return nullptr;
}

const KernelSet& active() {
  static const KernelSet& chosen = [] () -> const KernelSet& {
    const char* env = std::getenv("GROVE_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const KernelSet* wide = avx2_kernels()) return *wide;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace grove::kernels
