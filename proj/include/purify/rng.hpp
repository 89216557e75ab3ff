#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace purify {

// Identifies one reproducible draw sequence. Distinct streams under the same
// seed are statistically independent.
struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RandomSeed substream(std::uint64_t index) const;
  friend bool operator==(const RandomSeed&, const RandomSeed&) = default;
};

// Philox4x32-10 counter-based generator. The output at draw index k is a pure
// function of (seed, stream, k), so replications can be split across threads
// without shared state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(RandomSeed key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1); never returns 0.
  double uniform_open();
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double stddev);

  std::uint64_t draws() const { return counter_; }
  RandomSeed key() const { return key_; }

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key);

 private:
  RandomSeed key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  bool have_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace purify
