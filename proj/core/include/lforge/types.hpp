#pragma once

// Shared value types of the search engine. Everything here is immutable once
// constructed and safe to share between worker threads.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lforge {

enum class SpaceTag { Z, W };

std::string_view to_string(SpaceTag tag);
SpaceTag parse_space_tag(std::string_view text);

struct LatentSpaceSpec {
  SpaceTag tag = SpaceTag::Z;
  std::size_t dim = 512;

  LatentSpaceSpec() = default;
  /// Throws PreconditionError when dim == 0.
  LatentSpaceSpec(SpaceTag tag, std::size_t dim);

  /// Generator defaults: Z is 512-d, W is 18x512 flattened.
  static LatentSpaceSpec z(std::size_t dim = 512) { return {SpaceTag::Z, dim}; }
  static LatentSpaceSpec w(std::size_t dim = 18 * 512) { return {SpaceTag::W, dim}; }

  friend bool operator==(const LatentSpaceSpec&, const LatentSpaceSpec&) = default;
};

/// A point in the generator's latent space. Values are stored as 32-bit floats
/// so the text and binary encodings are exact.
class LatentVector {
 public:
  LatentVector(LatentSpaceSpec space, std::vector<float> values);
  /// Rounds each entry to float.
  static LatentVector from_doubles(LatentSpaceSpec space, std::span<const double> values);

  const LatentSpaceSpec& space() const { return space_; }
  std::span<const float> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  float operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;

 private:
  LatentSpaceSpec space_;
  std::vector<float> values_;
};

double euclidean_distance(const LatentVector& a, const LatentVector& b);
double chebyshev_distance(const LatentVector& a, const LatentVector& b);

/// Name of a demographic group. Must be an identifier: [A-Za-z0-9_-]+.
class GroupLabel {
 public:
  explicit GroupLabel(std::string name);

  const std::string& name() const { return name_; }

  friend bool operator==(const GroupLabel&, const GroupLabel&) = default;
  friend auto operator<=>(const GroupLabel&, const GroupLabel&) = default;

 private:
  std::string name_;
};

bool is_identifier(std::string_view text);

/// Nonempty, duplicate-free ordered list of labels.
std::vector<GroupLabel> make_label_set(const std::vector<std::string>& names);
std::vector<GroupLabel> default_labels();

enum class DistanceMetric { euclidean };

struct SearchConfig {
  std::uint32_t n = 4;
  double delta = 0.25;
  std::uint32_t max_iter = 500;
  std::uint64_t quota_per_group = 50;
  /// Per-group override of quota_per_group.
  std::map<std::string, std::uint64_t> group_quota;
  /// Oracle calls each group may spend (seed search + exploration).
  std::uint64_t oracle_call_budget = 1'000'000;
  std::uint64_t rng_seed = 0;
  DistanceMetric distance = DistanceMetric::euclidean;
  /// Dequeues allowed per seed chain; 0 means 100 * max_iter.
  std::uint64_t dequeue_cap = 0;

  std::uint64_t quota_for(const GroupLabel& group) const;
  std::uint64_t effective_dequeue_cap() const;
  /// Throws PreconditionError on any zero count or non-positive delta.
  void validate() const;
  /// Canonical one-line key=value rendering (used for fingerprints and manifests).
  std::string canonical() const;
};

struct OracleVerdict {
  bool face_detected = false;
  std::optional<GroupLabel> label;
  std::optional<std::vector<double>> embedding;

  /// label present implies face detected; embeddings are unit norm.
  void validate() const;
};

struct IdentityRecord {
  std::uint64_t identity_id = 0;
  GroupLabel group{"unset"};
  LatentVector latent{LatentSpaceSpec::z(1), {0.0F}};
  std::uint64_t seed_id = 0;
  std::optional<std::uint64_t> parent_id;
  std::uint32_t depth = 0;
  std::uint64_t call_index = 0;

  friend bool operator==(const IdentityRecord&, const IdentityRecord&) = default;
};

enum class DirectionKind { pose, expression, illumination, custom };

std::string_view to_string(DirectionKind kind);
DirectionKind parse_direction_kind(std::string_view text);

struct VariationDirection {
  DirectionKind kind = DirectionKind::custom;
  std::vector<double> vector;
  std::vector<double> magnitudes;
};

struct VariationSpec {
  std::vector<VariationDirection> directions;

  /// Dims must match, magnitude lists nonempty and free of zeros.
  void validate(std::size_t dim) const;
};

enum class GroupStatus { running, complete, partial };

std::string_view to_string(GroupStatus status);
GroupStatus parse_group_status(std::string_view text);

/// Bookkeeping for one group of a campaign.
struct GroupProgress {
  std::uint64_t quota = 0;
  std::uint64_t seeds_used = 0;
  std::uint64_t chains = 0;
  std::uint64_t calls_used = 0;
  std::uint64_t variant_calls = 0;
  GroupStatus status = GroupStatus::running;

  friend bool operator==(const GroupProgress&, const GroupProgress&) = default;
};

struct DatasetManifest {
  std::string config_fingerprint;
  std::string oracle_id;
  std::uint64_t rng_seed = 0;
  LatentSpaceSpec space;
  /// SearchConfig::canonical() of the producing run; informational.
  std::string config_line;
  /// Campaign group order (canonical merge order).
  std::vector<GroupLabel> groups;
  std::map<std::string, GroupProgress> progress;
  std::map<std::string, std::uint64_t> per_group_counts;
  std::vector<IdentityRecord> records;
  std::map<std::uint64_t, std::vector<LatentVector>> variant_latents;

  bool completed() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Every broken invariant, one human-readable line each. Empty means valid.
std::vector<std::string> validate_manifest(const DatasetManifest& manifest);

}  // namespace lforge
