#include <cstdlib>
#include <cstring>

#include "bbm/kernels.hpp"

namespace bbm {

namespace detail {
const KernelTable* avx2_table();  // kernels_avx2.cpp
}

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select() {
  const char* env = std::getenv("BBM_KERNELS");
  if (env && std::strcmp(env, "scalar") == 0) return &kernels_scalar();
  const KernelTable* avx2 = kernels_avx2();
  if (env && std::strcmp(env, "avx2") == 0 && avx2) return avx2;
  if (env && std::strcmp(env, "avx2") == 0 && !avx2) return &kernels_scalar();
  return avx2 ? avx2 : &kernels_scalar();
}

}  // namespace

const KernelTable* kernels_avx2() {
  return cpu_has_avx2_fma() ? detail::avx2_table() : nullptr;
}

const KernelTable& kernels() {
  static const KernelTable* table = select();
  return *table;
}

}  // namespace bbm
