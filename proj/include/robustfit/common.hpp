#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace robustfit {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Library error with a stable machine-readable code; the CLI surfaces the
// code/message pair as JSON on stderr.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const char* code, const std::string& message) {
  throw Error(code, message);
}

// Cascade summation; keeps rounding error O(log n) when terms span orders
// of magnitude.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double sqr(double x) { return x * x; }

}  // namespace robustfit
