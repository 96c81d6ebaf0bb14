#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace reconlab {

// xoshiro256** seeded through splitmix64. Integer output is bit-reproducible
// on every platform; floating-point helpers are built on it directly rather
// than on <random> distributions, whose algorithms are implementation-defined.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, purpose label, index).
  static Rng stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }

  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller.
  double normal();

private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view bytes);

} // namespace reconlab
