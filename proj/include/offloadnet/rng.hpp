#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace offloadnet {

/// Counter-based generator: the i-th output of a stream is a hash of
/// (key, i), so streams can be split by deriving child keys without
/// consuming draws from the parent.
class SplitMixStream {
 public:
  explicit SplitMixStream(std::uint64_t key) : key_(key) {}

  /// Key of the child stream `index` of a stream keyed `parent`.
  static std::uint64_t derive(std::uint64_t parent, std::uint64_t index);

  SplitMixStream split(std::uint64_t index) const { return SplitMixStream(derive(key_, index)); }

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Pareto with shape a and mode (minimum) q via inverse CDF q (1-U)^(-1/a).
  double pareto(double shape, double mode) { return pareto_quantile(shape, mode, uniform()); }

  static double pareto_quantile(double shape, double mode, double p);

  /// k items drawn uniformly without replacement, in draw order.
  template <typename T>
  std::vector<T> sample(std::span<const T> items, std::size_t k) {
    std::vector<T> pool(items.begin(), items.end());
    if (k > pool.size()) k = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Round to nearest, ties to even.
long round_half_even(double x);

}  // namespace offloadnet
