#pragma once

#include "nmfident/core.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace nmfident {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of tags into a seed, e.g. derive_seed(seed, {method, trial}).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept;

/// Counter-based generator: draw i of stream `key` is mix64(key ^ mix64(i)).
///
/// Every draw is a pure function of (key, counter), so results are identical
/// across platforms and standard libraries. Uniforms carry 53 random bits.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

  std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; both variates of a pair are used.
  double normal() noexcept;

  /// Exponential with unit rate.
  double exponential() noexcept { return -std::log1p(-uniform()); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
IndexList sample_without_replacement(CounterRng& rng, Index n, Index k);

Mat uniform_matrix(CounterRng& rng, Index rows, Index cols, double lo = 0.0, double hi = 1.0);
Mat gaussian_matrix(CounterRng& rng, Index rows, Index cols);
Mat exponential_matrix(CounterRng& rng, Index rows, Index cols);

/// Keeps exactly round(density * size) entries of `m`, zeroing the rest at
/// uniformly random positions.
void sparsify_exact(CounterRng& rng, Mat& m, double density);

/// Uniform sample from the probability simplex in R^dim.
Vec uniform_simplex(CounterRng& rng, Index dim);

}  // namespace nmfident
