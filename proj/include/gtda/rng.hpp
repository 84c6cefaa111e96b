#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace gtda {

/// Purposes that get their own random stream. Streams are derived from the
/// run seed, so turning one stage on or off never shifts the draws another
/// stage sees.
enum class Stream : std::uint64_t {
  Generation = 1,
  Shuffle = 2,
  Oversample = 3,
  WeightInit = 4,
  Clustering = 5,
};

/// SplitMix64 finalizer applied to `seed ^ (stream, index)`.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// The single PRNG used throughout: std::mt19937_64 (output sequence fixed
/// by the standard) with portable conversions to uniform, bounded-integer
/// and normal variates. std:: distributions are avoided because their
/// algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(seed, stream, index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t below(std::size_t n);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gtda
