#include "lforge/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "lforge/campaign.hpp"
#include "lforge/error.hpp"
#include "lforge/text.hpp"

namespace lforge {

RejectionResult rejection_sample(Oracle& oracle, const GroupLabel& target, std::uint64_t count, std::uint64_t budget,
                                 Rng& rng) {
  if (count == 0) throw PreconditionError("rejection sampling count must be >= 1");
  const auto& labels = oracle.info().labels;
  if (std::find(labels.begin(), labels.end(), target) == labels.end()) {
    throw PreconditionError("oracle has no group '" + target.name() + "'");
  }
  RejectionResult out;
  while (out.records.size() < count) {
    if (out.calls_used >= budget) {
      out.partial = true;
      break;
    }
    auto v = sample_prior(oracle.info().space, rng);
    ++out.calls_used;
    if (!fitness(oracle, v, target)) continue;
    IdentityRecord r;
    r.identity_id = out.records.size();
    r.seed_id = r.identity_id;
    r.group = target;
    r.latent = std::move(v);
    r.call_index = out.calls_used;
    out.records.push_back(std::move(r));
  }
  return out;
}

EfficiencyReport compare_efficiency(const GroupLabel& target, std::uint64_t count, const SearchConfig& config,
                                    const OracleFactory& oracles) {
  if (count == 0) throw PreconditionError("comparison count must be >= 1");
  using clock = std::chrono::steady_clock;
  EfficiencyReport report;
  report.group = target;
  report.count = count;

  {
    auto oracle = oracles();
    Rng rng = make_rng(config.rng_seed, {stream::kRejection});
    const auto t0 = clock::now();
    const auto rejection = rejection_sample(*oracle, target, count, config.oracle_call_budget, rng);
    report.rejection_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    report.rejection_calls = rejection.calls_used;
    if (rejection.partial) {
      report.comparable = false;
      report.note = "rejection sampling exhausted its budget";
    }
  }
  {
    SearchConfig single = config;
    single.quota_per_group = count;
    single.group_quota.clear();
    const auto t0 = clock::now();
    const auto manifest = run_campaign({target}, single, oracles);
    report.search_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    const auto& progress = manifest.progress.at(target.name());
    report.search_calls = progress.calls_used;
    if (progress.status != GroupStatus::complete) {
      report.comparable = false;
      report.note += report.note.empty() ? "" : "; ";
      report.note += "search exhausted its budget";
    }
  }
  report.ratio = report.search_calls == 0
                     ? 0.0
                     : static_cast<double>(report.rejection_calls) / static_cast<double>(report.search_calls);
  return report;
}

std::string format_efficiency_table(const std::vector<EfficiencyReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %8s %16s %13s %9s %14s\n", "group", "count", "rejection_calls",
                "search_calls", "ratio", "wall_seconds");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-18s %8llu %16llu %13llu %9.2f %6.3f/%-7.3f%s\n", r.group.name().c_str(),
                  static_cast<unsigned long long>(r.count), static_cast<unsigned long long>(r.rejection_calls),
                  static_cast<unsigned long long>(r.search_calls), r.ratio, r.rejection_seconds, r.search_seconds,
                  r.comparable ? "" : "  (incomparable)");
    out << line;
  }
  return out.str();
}

std::string format_efficiency_kv(const std::vector<EfficiencyReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    out << "group=" << r.group.name() << " count=" << r.count << " rejection_calls=" << r.rejection_calls
        << " search_calls=" << r.search_calls << " ratio=" << format_double(r.ratio)
        << " wall_seconds=" << format_double(r.rejection_seconds) << "," << format_double(r.search_seconds)
        << " comparable=" << (r.comparable ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace lforge
