#include <atomic>
#include <cstdlib>
#include <cstring>

#include "purify/kernels.hpp"

namespace purify::kernels {

#ifdef PURIFY_HAVE_AVX2
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#ifdef PURIFY_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

Isa initial_isa() {
  const char* env = std::getenv("PURIFY_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  return avx2_table() != nullptr ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (isa == Isa::Avx2 && avx2_table() == nullptr) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const KernelTable& table() {
  return active_isa() == Isa::Avx2 ? *avx2_table() : scalar_table();
}

}  // namespace purify::kernels
