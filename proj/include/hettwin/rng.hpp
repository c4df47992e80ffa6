#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hettwin {

/// Seeded RNG with named substreams. Every stochastic component draws from
/// its own stream so adding draws in one place never perturbs another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent engine for a named purpose and entity index.
  std::mt19937_64 stream(std::string_view purpose, std::uint64_t entity = 0) const {
    // FNV-1a over (seed, purpose, entity)
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    };
    mix(seed_);
    for (char c : purpose) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 1099511628211ull;
    }
    mix(entity);
    return std::mt19937_64(h);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace hettwin
