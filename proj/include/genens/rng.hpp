#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace genens {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

// SplitMix64 finalizer.
Seed mix64(Seed x) noexcept;

// Counter-based seed splitting: the child seed is a hash of the parent seed,
// a stream label and an index. Every random node in the library derives its
// seed this way, so results do not depend on execution order.
Seed derive_seed(Seed parent, std::string_view label, std::uint64_t index = 0) noexcept;

inline Engine make_engine(Seed seed) { return Engine(mix64(seed)); }

// Standard normal draw; kept in one place so every sampler shares it.
inline double standard_normal(Engine& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace genens
