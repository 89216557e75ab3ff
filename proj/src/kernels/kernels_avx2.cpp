#include <immintrin.h>

#include <limits>

#include "purify/kernels.hpp"

namespace purify::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv_avx2(const double* m, std::size_t rows, std::size_t cols, const double* x,
               double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_avx2(m + r * cols, x, cols);
}

// Lane j carries weight delta^(4m + j) at block m.
double discounted_sum_avx2(const double* v, std::size_t n, double delta) {
  const double d2 = delta * delta;
  const double d4 = d2 * d2;
  __m256d w = _mm256_set_pd(d2 * delta, d2, delta, 1.0);
  const __m256d step = _mm256_set1_pd(d4);
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_fmadd_pd(w, _mm256_loadu_pd(v + k), acc);
    w = _mm256_mul_pd(w, step);
  }
  double tail_w = _mm256_cvtsd_f64(w);
  double total = hsum(acc);
  for (; k < n; ++k) {
    total += tail_w * v[k];
    tail_w *= delta;
  }
  return total;
}

Moments moments_avx2(const double* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  __m256d q = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    s = _mm256_add_pd(s, v);
    q = _mm256_fmadd_pd(v, v, q);
  }
  Moments m{hsum(s), hsum(q), n};
  for (; i < n; ++i) {
    m.sum += x[i];
    m.sum_sq += x[i] * x[i];
  }
  return m;
}

double max_avx2(const double* x, std::size_t n) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    __m256d b = _mm256_set1_pd(best);
    for (; i + 4 <= n; i += 4) b = _mm256_max_pd(b, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, b);
    for (double l : lanes) best = l > best ? l : best;
  }
  for (; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

std::size_t count_at_least_avx2(const double* x, std::size_t n, double threshold) {
  std::size_t c = 0;
  std::size_t i = 0;
  const __m256d t = _mm256_set1_pd(threshold);
  for (; i + 4 <= n; i += 4) {
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(x + i), t, _CMP_GE_OQ));
    c += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i) c += x[i] >= threshold ? 1 : 0;
  return c;
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable t{dot_avx2, gemv_avx2, discounted_sum_avx2,
                             moments_avx2, max_avx2, count_at_least_avx2};
  return t;
}

}  // namespace purify::kernels
