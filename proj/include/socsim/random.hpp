#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace socsim {

constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t hash = 0xcbf29ce484222325ull) noexcept {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x00000100000001b3ull;
  }
  return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed of the named sub-stream of a master seed. Independent of the order in which
/// streams are created.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view name) noexcept {
  return splitmix64(master ^ splitmix64(fnv1a64(name)));
}

/// Seed of the i-th child of a seed (per-episode / per-trial splitting).
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed + splitmix64(index + 1));
}

/// Deterministic generator for one noise stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view stream) : engine_(stream_seed(master, stream)) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double gaussian(double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(engine_);
  }
  double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    return uniform() < p;
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace socsim
