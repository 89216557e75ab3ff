#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "purify/rng.hpp"

using namespace purify;

TEST_CASE("philox known-answer vectors") {
  // Reference outputs of Philox4x32-10 from the Random123 distribution.
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(CounterRng::philox(A4{0, 0, 0, 0}, A2{0, 0}) ==
        A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(CounterRng::philox(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                           A2{0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(CounterRng::philox(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                           A2{0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("same key reproduces the stream") {
  CounterRng a({7, 3}), b({7, 3});
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.draws() == b.draws());
}

TEST_CASE("substreams differ from each other and from the parent") {
  const RandomSeed root{42, 0};
  std::set<std::uint64_t> firsts;
  firsts.insert(CounterRng(root).next_u64());
  for (std::uint64_t i = 0; i < 64; ++i) firsts.insert(CounterRng(root.substream(i)).next_u64());
  CHECK(firsts.size() == 65);
  CHECK(root.substream(3) == root.substream(3));
  CHECK(root.substream(3).seed == 42);
}

TEST_CASE("uniform ranges") {
  CounterRng r({1, 1});
  for (int k = 0; k < 10000; ++k) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform_open();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("uniform and normal moments") {
  CounterRng r({2024, 0});
  const int n = 200000;
  double su = 0, suu = 0, sn = 0, snn = 0;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    su += u;
    suu += u * u;
    const double z = r.normal();
    sn += z;
    snn += z * z;
  }
  // 5 standard errors
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(suu / n - 1.0 / 3) < 5 * std::sqrt(4.0 / 45 / n));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
  CHECK(std::abs(snn / n - 1.0) < 5 * std::sqrt(2.0 / n));
}
