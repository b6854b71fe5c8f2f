#pragma once

// Quota-driven campaigns: for each target group, repeat {find seed; explore}
// until the group's quota is met or its oracle-call budget is spent. Groups
// are independent tasks and may run on parallel workers; each seed chain
// draws from its own stream derived from (rng_seed, group index, chain index),
// so serial, parallel and resumed runs all produce the same manifest.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lforge/oracle.hpp"
#include "lforge/types.hpp"

namespace lforge {

struct ProgressEvent {
  GroupLabel group;
  std::uint64_t accepted = 0;
  std::uint64_t quota = 0;
  std::uint64_t calls_used = 0;
  GroupStatus status = GroupStatus::running;
};

struct CampaignOptions {
  /// Concurrent group workers; 0 means one per group.
  std::size_t workers = 0;
  std::optional<VariationSpec> variations;
  /// Checkpoint file rewritten after every completed seed chain; empty disables it.
  std::string checkpoint_path;
  /// Called (serialized) with the campaign state after every completed chain.
  /// Throwing from it stops the campaign and rethrows from run_campaign.
  std::function<void(const DatasetManifest&)> on_checkpoint;
  /// Progress callback, fired when a group's acceptances cross a multiple of
  /// progress_every and when the group finishes.
  std::function<void(const ProgressEvent&)> on_progress;
  std::uint64_t progress_every = 0;
  /// State to continue from (a decoded checkpoint). Its fingerprint must match.
  std::optional<DatasetManifest> resume_from;
};

/// Hash of everything that determines a campaign's output.
std::string campaign_fingerprint(const std::vector<GroupLabel>& targets, const SearchConfig& config,
                                 const std::string& oracle_id, const std::optional<VariationSpec>& variations);

/// Returns the merged manifest; groups that ran out of budget are marked partial.
DatasetManifest run_campaign(const std::vector<GroupLabel>& targets, const SearchConfig& config,
                             const OracleFactory& oracles, const CampaignOptions& options = {});

}  // namespace lforge
