#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kpg/kernels.hpp"

namespace kpg::kern {

const Kernels* avx2_table_raw();  // defined in kernels_avx2.cpp

const Kernels* avx2_kernels() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return avx2_table_raw();
  }
#endif
  return nullptr;
}

const Kernels& active() {
  static const Kernels& chosen = []() -> const Kernels& {
    const char* env = std::getenv("KPG_KERNELS");
    const std::string want = env ? env : "";
    if (want == "scalar") return scalar_kernels();
    const Kernels* avx2 = avx2_kernels();
    if (want == "avx2") {
      if (!avx2) {
        throw std::runtime_error(
            "KPG_KERNELS=avx2 requested but the CPU lacks AVX2/FMA");
      }
      return *avx2;
    }
    if (!want.empty()) {
      throw std::runtime_error("unknown KPG_KERNELS value: " + want);
    }
    return avx2 ? *avx2 : scalar_kernels();
  }();
  return chosen;
}

}  // namespace kpg::kern
