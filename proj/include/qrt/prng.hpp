#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qrt {

/// Seeded random stream shared by every stochastic routine.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// conversions to doubles are done here: uniform() takes the top 53 bits and
/// normal() uses the Box-Muller transform. Identical seeds therefore give
/// identical draws on every conforming toolchain.
class PrngStream {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/53bit-uniform/box-muller";

  explicit PrngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  bool coin() { return (engine_() >> 63) != 0; }

  /// Independent child stream, e.g. one per trial.
  PrngStream fork() { return PrngStream(next_u64()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qrt
