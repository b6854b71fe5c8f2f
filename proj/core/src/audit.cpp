#include "lforge/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "lforge/error.hpp"
#include "lforge/text.hpp"

namespace lforge {

void AccuracyTable::validate() const {
  if (entries.empty()) throw PreconditionError("accuracy table is empty");
  std::set<std::string> seen;
  for (const auto& [group, acc] : entries) {
    if (!seen.insert(group.name()).second) throw PreconditionError("group '" + group.name() + "' appears twice");
    if (!(acc >= 0.0 && acc <= 100.0)) {
      throw PreconditionError("accuracy of '" + group.name() + "' is outside [0, 100]");
    }
  }
}

AccuracyTable parse_accuracy_table(std::string_view text) {
  AccuracyTable table;
  for (const auto& a : parse_assignments(text)) {
    try {
      table.entries.emplace_back(GroupLabel(a.key), parse_double(a.value));
    } catch (const PreconditionError& e) {
      throw ParseError(e.what(), a.line, a.column);
    }
  }
  table.validate();
  return table;
}

double accuracy_difference(const AccuracyTable& table) {
  table.validate();
  if (table.entries.size() < 2) throw PreconditionError("accuracy difference needs at least two groups");
  double worst = 0.0;
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < table.entries.size(); ++j) {
      worst = std::max(worst, std::abs(table.entries[i].second - table.entries[j].second));
    }
  }
  return worst;
}

std::string_view to_string(ThresholdOrientation o) {
  return o == ThresholdOrientation::higher_is_similar ? "higher" : "lower";
}

ThresholdOrientation parse_threshold_orientation(std::string_view text) {
  if (text == "higher") return ThresholdOrientation::higher_is_similar;
  if (text == "lower") return ThresholdOrientation::lower_is_similar;
  throw PreconditionError("threshold orientation must be 'higher' or 'lower'");
}

std::size_t similarity_bin(double similarity) {
  const double pos = std::floor((similarity + 1.0) / kSimilarityBinWidth);
  if (!(pos > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(pos), kSimilarityBins - 1);
}

bool is_duplicate(double similarity, const UniquenessOptions& options) {
  if (options.orientation == ThresholdOrientation::higher_is_similar) return similarity >= options.threshold;
  return 1.0 - similarity <= options.threshold;
}

UniquenessReport uniqueness_from_embeddings(std::span<const std::vector<double>> embeddings,
                                            const UniquenessOptions& options) {
  UniquenessReport report;
  report.threshold = options.threshold;
  report.orientation = options.orientation;
  report.identities = embeddings.size();
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      const auto& a = embeddings[i];
      const auto& b = embeddings[j];
      if (a.size() != b.size()) throw PreconditionError("embeddings differ in dimension");
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
      ++report.histogram[similarity_bin(s)];
      ++report.pair_count;
      if (is_duplicate(s, options)) ++report.duplicate_pairs;
    }
  }
  report.duplicate_rate =
      report.pair_count == 0 ? 0.0 : static_cast<double>(report.duplicate_pairs) / static_cast<double>(report.pair_count);
  return report;
}

std::vector<std::vector<double>> identity_embeddings(const DatasetManifest& manifest, Oracle& oracle) {
  if (oracle.info().embedding_dim == 0) throw UnsupportedAudit("oracle provides no embeddings");
  std::vector<std::vector<double>> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    auto verdict = oracle.evaluate(r.latent);
    if (!verdict.embedding) {
      throw UnsupportedAudit("oracle returned no embedding for identity " + std::to_string(r.identity_id));
    }
    out.push_back(std::move(*verdict.embedding));
  }
  return out;
}

UniquenessReport uniqueness_report(const DatasetManifest& manifest, Oracle& oracle, const UniquenessOptions& options) {
  const auto embeddings = identity_embeddings(manifest, oracle);
  return uniqueness_from_embeddings(embeddings, options);
}

std::string format_uniqueness_text(const UniquenessReport& r) {
  std::ostringstream out;
  out << "identities      " << r.identities << '\n'
      << "pairs           " << r.pair_count << '\n'
      << "threshold       " << format_double(r.threshold) << " (" << to_string(r.orientation)
      << " score = more similar)\n"
      << "duplicate pairs " << r.duplicate_pairs << '\n';
  char rate[64];
  std::snprintf(rate, sizeof rate, "%.6f", r.duplicate_rate);
  out << "duplicate rate  " << rate << '\n';
  return out.str();
}

std::string format_uniqueness_kv(const UniquenessReport& r) {
  std::ostringstream out;
  out << "identities=" << r.identities << '\n'
      << "pair_count=" << r.pair_count << '\n'
      << "threshold=" << format_double(r.threshold) << '\n'
      << "orientation=" << to_string(r.orientation) << '\n'
      << "duplicate_pairs=" << r.duplicate_pairs << '\n'
      << "duplicate_rate=" << format_double(r.duplicate_rate) << '\n';
  return out.str();
}

std::string format_histogram(const UniquenessReport& r) {
  std::ostringstream out;
  char line[64];
  for (std::size_t b = 0; b < r.histogram.size(); ++b) {
    std::snprintf(line, sizeof line, "%.2f %llu\n", -1.0 + static_cast<double>(b) * kSimilarityBinWidth,
                  static_cast<unsigned long long>(r.histogram[b]));
    out << line;
  }
  return out.str();
}

std::map<std::string, BalanceEntry> balance_report(const DatasetManifest& manifest) {
  std::map<std::string, BalanceEntry> out;
  for (const auto& g : manifest.groups) out[g.name()] = {};
  for (const auto& r : manifest.records) ++out[r.group.name()].count;
  const auto total = static_cast<std::uint64_t>(manifest.records.size());
  const auto k = static_cast<std::uint64_t>(out.size());
  for (auto& [name, e] : out) {
    e.share = total == 0 ? 0.0 : static_cast<double>(e.count) / static_cast<double>(total);
    e.deviates = e.count * k != total;
  }
  return out;
}

std::string format_balance_kv(const DatasetManifest& manifest, const std::map<std::string, BalanceEntry>& report) {
  std::ostringstream out;
  for (const auto& g : manifest.groups) {
    const auto& e = report.at(g.name());
    out << "group=" << g.name() << " count=" << e.count << " share=" << format_double(e.share)
        << " deviates=" << (e.deviates ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace lforge
