#pragma once

// Post-hoc audits of a finished dataset: biometric uniqueness of identity
// embeddings, group balance, and the accuracy-difference bias metric.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lforge/oracle.hpp"
#include "lforge/types.hpp"

namespace lforge {

/// Per-group accuracy percentages in [0, 100], in file order.
struct AccuracyTable {
  std::vector<std::pair<GroupLabel, double>> entries;

  void validate() const;
};

/// "group = accuracy" lines. Throws ParseError.
AccuracyTable parse_accuracy_table(std::string_view text);

/// max over group pairs of |acc_i - acc_j|. Needs at least two groups.
double accuracy_difference(const AccuracyTable& table);

/// Operating threshold of the SFace verifier.
inline constexpr double kDefaultMatchThreshold = 0.593;
inline constexpr double kSimilarityBinWidth = 0.02;
inline constexpr std::size_t kSimilarityBins = 100;

enum class ThresholdOrientation {
  /// Scores are cosine similarities; a pair is the same person when score >= threshold.
  higher_is_similar,
  /// Scores are cosine distances (1 - similarity); same person when distance <= threshold.
  lower_is_similar,
};

std::string_view to_string(ThresholdOrientation o);
ThresholdOrientation parse_threshold_orientation(std::string_view text);

struct UniquenessOptions {
  double threshold = kDefaultMatchThreshold;
  ThresholdOrientation orientation = ThresholdOrientation::higher_is_similar;
};

struct UniquenessReport {
  std::uint64_t identities = 0;
  std::uint64_t pair_count = 0;
  /// Cosine similarity counts over [-1, 1] in bins of width 0.02; 1.0 lands in the last bin.
  std::vector<std::uint64_t> histogram = std::vector<std::uint64_t>(kSimilarityBins, 0);
  std::uint64_t duplicate_pairs = 0;
  double duplicate_rate = 0.0;
  double threshold = kDefaultMatchThreshold;
  ThresholdOrientation orientation = ThresholdOrientation::higher_is_similar;
};

std::size_t similarity_bin(double similarity);
bool is_duplicate(double similarity, const UniquenessOptions& options);

/// All unordered pairs of the given unit embeddings.
UniquenessReport uniqueness_from_embeddings(std::span<const std::vector<double>> embeddings,
                                            const UniquenessOptions& options = {});

/// Embedding of every record's base latent (variants are ignored). Throws
/// UnsupportedAudit when the oracle yields no embeddings.
std::vector<std::vector<double>> identity_embeddings(const DatasetManifest& manifest, Oracle& oracle);

UniquenessReport uniqueness_report(const DatasetManifest& manifest, Oracle& oracle,
                                   const UniquenessOptions& options = {});

std::string format_uniqueness_text(const UniquenessReport& report);
std::string format_uniqueness_kv(const UniquenessReport& report);
/// Two columns: bin_left count.
std::string format_histogram(const UniquenessReport& report);

struct BalanceEntry {
  std::uint64_t count = 0;
  double share = 0.0;
  /// Share differs from 1 / number_of_groups.
  bool deviates = false;
};

/// Counts come from the records themselves, not the stored bookkeeping.
std::map<std::string, BalanceEntry> balance_report(const DatasetManifest& manifest);
std::string format_balance_kv(const DatasetManifest& manifest, const std::map<std::string, BalanceEntry>& report);

}  // namespace lforge
