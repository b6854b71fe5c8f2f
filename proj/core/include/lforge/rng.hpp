#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lforge {

using Rng = std::mt19937_64;

/// One splitmix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Independent stream seed for a path below a root seed, e.g. (seed, group, chain).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(root, path));
}

/// Stream tags for non-campaign consumers of the root seed.
namespace stream {
inline constexpr std::uint64_t kCampaign = 0x63616d70;
inline constexpr std::uint64_t kRejection = 0x72656a65;
inline constexpr std::uint64_t kWorld = 0x776f726c;
inline constexpr std::uint64_t kCalibration = 0x63616c69;
}  // namespace stream

}  // namespace lforge
