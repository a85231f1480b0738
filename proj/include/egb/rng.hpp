// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seed derivation and portable random draws. Only the raw mt19937_64 bit
// stream and std::seed_seq are used: both are fully specified by the
// standard, so draws are identical across standard libraries. The
// <random> distributions are not, which is why uniform() and below() are
// implemented here.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace egb {

/// 64-bit FNV-1a, used to fold string identifiers into seeds.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Mixes a list of 64-bit words into one seed through std::seed_seq.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint32_t> parts;
  parts.reserve(words.size() * 2);
  for (auto w : words) {
    parts.push_back(static_cast<std::uint32_t>(w));
    parts.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq seq(parts.begin(), parts.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Index drawn proportionally to non-negative `weights`; returns
  /// weights.size() when the total weight is zero.
  template <typename Container>
  std::size_t weighted(const Container& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return weights.size();
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    std::size_t i = 0;
    for (double w : weights) {
      if (w > 0.0) {
        acc += w;
        last_positive = i;
        if (u < acc) return i;
      }
      ++i;
    }
    return last_positive;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                     first + static_cast<std::ptrdiff_t>(j));
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace egb
