#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by the mechanism and repeated-game engines.
// Every kernel has a scalar reference implementation; an AVX2 variant is
// selected at runtime when the CPU supports it. Set PURIFY_KERNELS=scalar to
// force the reference path.
namespace purify::kernels {

enum class Isa { Scalar, Avx2 };

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  double mean() const;
  double variance() const;  // unbiased
};

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*gemv)(const double* m, std::size_t rows, std::size_t cols, const double* x,
               double* out);
  double (*discounted_sum)(const double* v, std::size_t n, double delta);
  Moments (*moments)(const double* x, std::size_t n);
  double (*max_value)(const double* x, std::size_t n);
  std::size_t (*count_at_least)(const double* x, std::size_t n, double threshold);
};

const KernelTable& scalar_table();
// Null when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

Isa active_isa();
void set_isa(Isa isa);  // falls back to Scalar when Avx2 is unavailable
std::string_view isa_name(Isa isa);
const KernelTable& table();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return table().dot(a.data(), b.data(), a.size());
}
// out[r] = sum_c m[r * cols + c] * x[c]
inline void gemv(std::span<const double> m, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> out) {
  table().gemv(m.data(), rows, cols, x.data(), out.data());
}
// sum_k v[k] * delta^k
inline double discounted_sum(std::span<const double> v, double delta) {
  return table().discounted_sum(v.data(), v.size(), delta);
}
inline Moments moments(std::span<const double> x) {
  return table().moments(x.data(), x.size());
}
inline double max_value(std::span<const double> x) {
  return table().max_value(x.data(), x.size());
}
inline std::size_t count_at_least(std::span<const double> x, double threshold) {
  return table().count_at_least(x.data(), x.size(), threshold);
}

}  // namespace purify::kernels
