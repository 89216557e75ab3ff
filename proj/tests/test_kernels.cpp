#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "purify/kernels.hpp"
#include "purify/rng.hpp"

using namespace purify;
namespace k = purify::kernels;

namespace {

std::vector<double> draws(std::size_t n, std::uint64_t s) {
  CounterRng r({s, 0});
  std::vector<double> v(n);
  for (auto& x : v) x = r.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("scalar reference against hand-computed values") {
  const auto& t = k::scalar_table();
  const double a[] = {1, 2, 3, 4, 5};
  const double b[] = {5, 4, 3, 2, 1};
  CHECK(t.dot(a, b, 5) == 35.0);
  const double m[] = {1, 0, 2, 0, 1, 1};
  const double x[] = {1, 2, 3};
  double out[2];
  t.gemv(m, 2, 3, x, out);
  CHECK(out[0] == 7.0);
  CHECK(out[1] == 5.0);
  CHECK(t.discounted_sum(a, 3, 0.5) == doctest::Approx(1 + 1 + 0.75));
  const auto mo = t.moments(a, 5);
  CHECK(mo.mean() == 3.0);
  CHECK(mo.variance() == 2.5);
  CHECK(t.max_value(b, 5) == 5.0);
  CHECK(t.count_at_least(a, 5, 3.0) == 3);
}

TEST_CASE("avx2 matches scalar on every length up to 67") {
  const k::KernelTable* avx = k::avx2_table();
  if (!avx) {
    MESSAGE("AVX2 unavailable; equivalence skipped");
    return;
  }
  const auto& s = k::scalar_table();
  for (std::size_t n = 0; n <= 67; ++n) {
    CAPTURE(n);
    const auto a = draws(n, 10 + n);
    const auto b = draws(n, 100 + n);
    const double tol = 1e-13 * (1.0 + double(n));
    CHECK(avx->dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(tol));
    CHECK(avx->discounted_sum(a.data(), n, 0.93) ==
          doctest::Approx(s.discounted_sum(a.data(), n, 0.93)).epsilon(tol));
    const auto ma = avx->moments(a.data(), n), ms = s.moments(a.data(), n);
    CHECK(ma.count == ms.count);
    CHECK(ma.sum == doctest::Approx(ms.sum).epsilon(tol));
    CHECK(ma.sum_sq == doctest::Approx(ms.sum_sq).epsilon(tol));
    if (n > 0) CHECK(avx->max_value(a.data(), n) == s.max_value(a.data(), n));
    CHECK(avx->count_at_least(a.data(), n, 0.3) == s.count_at_least(a.data(), n, 0.3));
    const std::size_t rows = 5;
    const auto m = draws(rows * n, 1000 + n);
    std::vector<double> oa(rows), os(rows);
    avx->gemv(m.data(), rows, n, a.data(), oa.data());
    s.gemv(m.data(), rows, n, a.data(), os.data());
    for (std::size_t r = 0; r < rows; ++r) CHECK(oa[r] == doctest::Approx(os[r]).epsilon(tol));
  }
}

TEST_CASE("isa selection") {
  const auto before = k::active_isa();
  k::set_isa(k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  CHECK(&k::table() == &k::scalar_table());
  k::set_isa(k::Isa::Avx2);
  if (k::avx2_table()) CHECK(k::active_isa() == k::Isa::Avx2);
  else CHECK(k::active_isa() == k::Isa::Scalar);
  k::set_isa(before);
  CHECK(k::isa_name(k::Isa::Scalar) == "scalar");
}
