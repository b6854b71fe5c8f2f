#pragma once

// Random rejection sampling and its cost comparison against the latent search.
// Cost is counted in oracle calls; wall-clock seconds are reported alongside.

#include <cstdint>
#include <string>
#include <vector>

#include "lforge/oracle.hpp"
#include "lforge/rng.hpp"
#include "lforge/types.hpp"

namespace lforge {

struct RejectionResult {
  std::vector<IdentityRecord> records;
  std::uint64_t calls_used = 0;
  bool partial = false;
};

/// Draws prior samples until `count` have fitness 1 or `budget` calls are spent.
/// Throws PreconditionError for count 0 or a label the oracle does not know.
RejectionResult rejection_sample(Oracle& oracle, const GroupLabel& target, std::uint64_t count, std::uint64_t budget,
                                 Rng& rng);

struct EfficiencyReport {
  GroupLabel group{"unset"};
  std::uint64_t count = 0;
  std::uint64_t rejection_calls = 0;
  std::uint64_t search_calls = 0;
  /// rejection_calls / search_calls.
  double ratio = 0.0;
  double rejection_seconds = 0.0;
  double search_seconds = 0.0;
  bool comparable = true;
  std::string note;
};

/// Runs both methods on fresh oracle handles with the same call budget:
/// rejection sampling on the rejection stream of config.rng_seed, and a
/// single-group campaign with quota = count.
EfficiencyReport compare_efficiency(const GroupLabel& target, std::uint64_t count, const SearchConfig& config,
                                    const OracleFactory& oracles);

std::string format_efficiency_table(const std::vector<EfficiencyReport>& reports);
/// One "group=... rejection_calls=... search_calls=... ratio=... wall_seconds=..." line per report.
std::string format_efficiency_kv(const std::vector<EfficiencyReport>& reports);

}  // namespace lforge
