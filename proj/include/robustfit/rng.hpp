#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "robustfit/common.hpp"

namespace robustfit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Independent substream seed for (seed, index); replicate i always sees the
// same stream no matter how work is scheduled.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
  splitmix64(s);
  return splitmix64(s);
}

// mt19937_64 with explicit Box-Muller so the normal stream does not depend on
// the standard library's distribution implementation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace robustfit
