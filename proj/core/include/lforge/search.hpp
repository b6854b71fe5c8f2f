#pragma once

// Breadth-first evolutionary latent search for one target group.
//
// A seed is found by prior sampling until the oracle labels a latent with the
// target group. From the seed, a FIFO frontier is expanded: each dequeued
// latent that is still a face of the target group is accepted, and spawns n
// uniform mutations in the box [-delta, +delta]^dim. Only children strictly
// farther (Euclidean) from the seed than their parent are enqueued, so the
// search moves outward and never revisits its own neighbourhood.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lforge/oracle.hpp"
#include "lforge/rng.hpp"
#include "lforge/types.hpp"

namespace lforge {

struct SeedResult {
  LatentVector latent;
  /// Oracle calls spent, including the hit.
  std::uint64_t calls = 0;
};

/// First prior sample with fitness 1. Throws PreconditionError when budget is
/// 0 and SeedNotFound when the budget runs out.
SeedResult find_seed(Oracle& oracle, const GroupLabel& target, std::uint64_t budget, Rng& rng);

/// n children of `parent`, each coordinate shifted by U[-delta, +delta].
std::vector<LatentVector> mutate(const LatentVector& parent, std::uint32_t n, double delta, Rng& rng);

enum class Termination { queue_empty, max_iter, budget, dequeue_cap, oracle_error };

std::string_view to_string(Termination t);

struct ExploreOptions {
  /// Stop after this many acceptances; 0 means config.max_iter.
  std::uint64_t max_accept = 0;
  /// Oracle calls this chain may spend.
  std::uint64_t call_budget = UINT64_MAX;
  /// identity_id given to the seed record; the rest follow densely.
  std::uint64_t first_id = 0;
  /// Added to chain-local call counts to form call_index.
  std::uint64_t call_base = 0;
  /// Skip evaluating the seed when the caller already knows its fitness is 1.
  bool seed_verified = false;
  /// call_index to record for a verified seed.
  std::uint64_t seed_call_index = 0;
};

struct ExploreResult {
  std::vector<IdentityRecord> records;
  Termination termination = Termination::queue_empty;
  std::uint64_t calls = 0;
  std::uint64_t dequeues = 0;
  std::string error;
};

ExploreResult explore(const LatentVector& seed, const GroupLabel& target, const SearchConfig& config, Oracle& oracle,
                      Rng& rng, const ExploreOptions& options = {});

/// Variants v + m * d for every direction d and magnitude m that the oracle
/// still sees as a face of `target`. Never returns `v` itself.
std::vector<LatentVector> expand_identity(const LatentVector& v, const VariationSpec& spec, const GroupLabel& target,
                                          Oracle& oracle);

/// Searching knobs that do not come from the config file defaults.
inline constexpr std::uint32_t kDefaultMutations = 4;
inline constexpr std::uint32_t kDefaultMaxIter = 500;
/// Fraction of the mean component spread used as the default mutation half-range.
inline constexpr double kDefaultDeltaFraction = 0.25;

}  // namespace lforge
