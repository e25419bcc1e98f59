#include "offloadnet/rng.hpp"

#include <cmath>

namespace offloadnet {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SplitMixStream::derive(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent + kGolden) ^ mix64((index + 1) * kGolden));
}

std::uint64_t SplitMixStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double SplitMixStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMixStream::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double SplitMixStream::pareto_quantile(double shape, double mode, double p) {
  return mode * std::pow(1.0 - p, -1.0 / shape);
}

long round_half_even(double x) {
  double r = std::round(x);
  if (std::fabs(x - std::trunc(x)) == 0.5) r = 2.0 * std::round(x / 2.0);
  return static_cast<long>(r);
}

}  // namespace offloadnet
