#include "lforge/rng.hpp"

namespace lforge {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = root;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t step : path) {
    state = out ^ (step * 0xd1b54a32d192ed03ULL);
    out = splitmix64(state);
  }
  return out;
}

}  // namespace lforge
