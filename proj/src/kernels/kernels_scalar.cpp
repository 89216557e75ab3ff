#include <algorithm>
#include <cmath>
#include <limits>

#include "purify/kernels.hpp"

namespace purify::kernels {

double Moments::mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }

double Moments::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
}

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv_scalar(const double* m, std::size_t rows, std::size_t cols, const double* x,
                 double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(m + r * cols, x, cols);
}

double discounted_sum_scalar(const double* v, std::size_t n, double delta) {
  double acc = 0.0;
  double w = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += w * v[k];
    w *= delta;
  }
  return acc;
}

Moments moments_scalar(const double* x, std::size_t n) {
  Moments m;
  for (std::size_t i = 0; i < n; ++i) {
    m.sum += x[i];
    m.sum_sq += x[i] * x[i];
  }
  m.count = n;
  return m;
}

double max_scalar(const double* x, std::size_t n) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) best = x[i] > best ? x[i] : best;
  return best;
}

std::size_t count_at_least_scalar(const double* x, std::size_t n, double threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += x[i] >= threshold ? 1 : 0;
  return c;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{dot_scalar,       gemv_scalar, discounted_sum_scalar,
                             moments_scalar,   max_scalar,  count_at_least_scalar};
  return t;
}

}  // namespace purify::kernels
