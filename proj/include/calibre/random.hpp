#pragma once

#include <cstdint>
#include <random>

namespace calibre {

/// Seeded generator used by every stochastic routine in the library.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform and normal variates are derived here rather than
/// through <random> distributions, whose algorithms are implementation
/// defined, so a seed reproduces the same numbers on every toolchain.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64/box-muller/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on the open interval (0, 1).
  double uniform_open();

  /// Standard normal via Box-Muller. The second variate of each pair is cached.
  double normal();

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for stream `index` of a master seed.
/// Defined as splitmix64(master ^ splitmix64(index + 1)).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace calibre
