#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace pdmp {

/// Seeded random stream.
///
/// Engine: std::mt19937_64 (fully specified by the standard). Conversions to
/// uniform doubles, normals and bounded integers are implemented here rather
/// than through <random> distributions, whose algorithms are unspecified and
/// differ between standard libraries.
///
/// Independent consumers (data, init, shuffling, subsets) never share a
/// stream. Each one derives its own with `derive(tag)`, which mixes the
/// parent seed and a 64-bit FNV-1a hash of the tag through splitmix64. The
/// derived seed depends only on (seed, tag), not on how many draws the parent
/// has made.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng derive(std::string_view tag) const;
  Rng derive(std::string_view tag, std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Uniform integer in [0, n), rejection sampled. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace pdmp
