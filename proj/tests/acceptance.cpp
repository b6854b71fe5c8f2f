// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lforge/audit.hpp"
#include "lforge/baseline.hpp"
#include "lforge/campaign.hpp"
#include "lforge/manifest_io.hpp"
#include "lforge/mixture_world.hpp"
#include "lforge/search.hpp"
#include "lforge/text.hpp"
#include "support/reference.hpp"
#include "support/util.hpp"

using namespace lforge;

namespace {

// Tolerances.
constexpr double kAdTolerance = 0.05;
constexpr double kBiasRelTolerance = 0.20;
constexpr std::size_t kBiasSamples = 100'000;
constexpr double kRareRatioFloor = 5.0;
constexpr double kMajorityRatioFloor = 1.0;
constexpr std::uint64_t kEfficiencyCount = 100;
constexpr int kPropertyCampaigns = 20;
constexpr std::size_t kUniquenessIdentities = 200;
constexpr std::uint64_t kRejectionTrials = 10'000;
constexpr double kRejectionSigmas = 3.0;
constexpr std::size_t kReferenceMassSamples = 2'000'000;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail.clear();
  o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += why;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

AccuracyTable table_of(const std::vector<double>& acc) {
  static const char* names[] = {"Indian", "Asian", "White", "African"};
  AccuracyTable t;
  for (std::size_t i = 0; i < acc.size(); ++i) t.entries.emplace_back(GroupLabel(names[i]), acc[i]);
  return t;
}

Outcome ad_metric() {
  struct Row {
    const char* name;
    std::vector<double> acc;
    double printed;
  };
  const std::vector<Row> rows = {
      {"vgg/ArcFace", {79.17, 74.90, 82.48, 73.80}, 8.68},
      {"vgg/AdaFace", {77.97, 75.67, 82.52, 70.18}, 12.33},
      {"vgg/ElasticFace", {74.97, 71.32, 77.78, 70.92}, 6.87},
      {"bupt/ArcFace", {94.23, 92.87, 95.03, 92.92}, 2.12},
      {"bupt/AdaFace", {93.28, 92.87, 95.02, 90.78}, 4.23},
      {"bupt/ElasticFace", {94.23, 93.83, 95.30, 93.03}, 2.27},
      {"global/ArcFace", {94.85, 94.28, 96.23, 93.20}, 3.03},
      {"global/AdaFace", {94.22, 93.88, 96.63, 91.05}, 5.58},
      {"global/ElasticFace", {95.32, 94.70, 97.07, 93.68}, 3.38},
  };
  Outcome o;
  double worst = 0.0;
  for (const auto& r : rows) {
    const double got = accuracy_difference(table_of(r.acc));
    worst = std::max(worst, std::abs(got - r.printed));
    if (std::abs(got - r.printed) > kAdTolerance) fail(o, std::string(r.name) + " gave " + fmt("%.4f", got));
  }
  // Dyadic inputs: the answer is exact.
  if (accuracy_difference(table_of({12.5, 100.0, 0.25})) != 99.75) fail(o, "synthetic {12.5,100,0.25} not 99.75");
  if (accuracy_difference(table_of({50.0, 50.0, 50.0})) != 0.0) fail(o, "synthetic equal table not 0");
  if (accuracy_difference(table_of({62.5, 37.5})) != 25.0) fail(o, "synthetic {62.5,37.5} not 25");
  if (o.pass) o.detail = "9 rows, worst |delta| " + fmt("%.4f", worst) + ", synthetic exact";
  return o;
}

/// Shares of each group among fresh standard-normal priors, classified by the reference.
std::vector<double> reference_mass(const MixtureWorld& w, std::size_t samples, std::uint64_t seed) {
  const auto m = test::to_reference(w);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> counts(w.groups.size(), 0.0);
  std::vector<double> v(w.space.dim);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& x : v) x = static_cast<float>(normal(gen));
    const auto verdict = ref::classify(m, v);
    if (verdict.label) counts[*verdict.label] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(samples);
  return counts;
}

Outcome bias_calibration() {
  const auto w = default_world();
  const auto mass = reference_mass(*w, kBiasSamples, 0x5eed'b1a5);
  const std::map<std::string, double> measured_bias = {{"Indian", 0.0026}, {"African", 0.0171}, {"Caucasian", 0.65}};
  Outcome o;
  for (const auto& [g, target] : measured_bias) {
    const double got = mass[w->index_of(GroupLabel(g))];
    const double rel = std::abs(got - target) / target;
    o.detail += (o.detail.empty() ? "" : " ") + g + "=" + fmt("%.4f", got) + "(" + fmt("%+.1f%%", 100 * (got - target) / target) + ")";
    if (rel > kBiasRelTolerance) fail(o, g + " off by " + fmt("%.1f%%", 100 * rel));
  }
  return o;
}

SearchConfig base_config(std::uint64_t seed) {
  SearchConfig c;
  c.delta = kDefaultDeltaFraction * default_world()->spreads[0];
  c.rng_seed = seed;
  return c;
}

Outcome efficiency() {
  const auto w = default_world();
  const auto factory = simulated_factory(w);
  const auto c = base_config(2024);
  const auto rare = compare_efficiency(GroupLabel("Indian"), kEfficiencyCount, c, factory);
  const auto major = compare_efficiency(GroupLabel("Caucasian"), kEfficiencyCount, c, factory);
  Outcome o;
  o.detail = "Indian ratio " + fmt("%.2f", rare.ratio) + " (" + std::to_string(rare.rejection_calls) + "/" +
             std::to_string(rare.search_calls) + "), Caucasian ratio " + fmt("%.2f", major.ratio);
  if (!rare.comparable || rare.ratio < kRareRatioFloor) fail(o, "rare ratio " + fmt("%.2f", rare.ratio) + " < 5");
  if (!major.comparable || major.ratio <= kMajorityRatioFloor)
    fail(o, "majority ratio " + fmt("%.2f", major.ratio) + " <= 1");
  return o;
}

double distance(const LatentVector& a, const LatentVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = static_cast<double>(a.values()[i]) - b.values()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Outcome algorithm_properties() {
  const auto w = default_world();
  const auto m = test::to_reference(*w);
  const auto factory = simulated_factory(w);
  Outcome o;
  std::uint64_t records = 0, edges = 0;
  for (int k = 0; k < kPropertyCampaigns; ++k) {
    auto c = base_config(1000 + k);
    c.n = 2 + k % 4;
    c.delta = (0.1 + 0.05 * (k % 5)) * w->spreads[0];
    c.max_iter = 3 + k % 7;
    c.quota_per_group = 10 + k % 6;
    if (k % 5 == 4) c.group_quota["Indian"] = 3;
    const std::string tag = "campaign " + std::to_string(k) + ": ";

    CampaignOptions serial;
    serial.workers = 1;
    const auto man = run_campaign(w->groups, c, factory, serial);
    CampaignOptions parallel;
    parallel.workers = 2 + k % 5;
    const auto par = run_campaign(w->groups, c, factory, parallel);
    if (encode_manifest(man) != encode_manifest(par) || encode_latent_sidecar(man) != encode_latent_sidecar(par))
      fail(o, tag + "serial and parallel manifests differ");
    if (encode_manifest(man) != encode_manifest(run_campaign(w->groups, c, factory, serial)))
      fail(o, tag + "rerun differs");

    std::map<std::uint64_t, const IdentityRecord*> by_id;
    for (const auto& r : man.records) by_id[r.identity_id] = &r;
    std::map<std::uint64_t, std::uint64_t> per_seed;
    for (const auto& r : man.records) {
      ++records;
      ++per_seed[r.seed_id];
      const auto verdict = ref::classify(m, test::widen(r.latent.values()));
      if (!verdict.label || w->groups[*verdict.label] != r.group)
        fail(o, tag + "record " + std::to_string(r.identity_id) + " label impure");
      if (!r.parent_id) continue;
      ++edges;
      const auto& parent = *by_id.at(*r.parent_id);
      const auto& seed = *by_id.at(r.seed_id);
      if (!(distance(r.latent, seed.latent) > distance(parent.latent, seed.latent)))
        fail(o, tag + "edge " + std::to_string(r.identity_id) + " not strictly outward");
      for (std::size_t i = 0; i < r.latent.values().size(); ++i) {
        const double step = std::abs(static_cast<double>(r.latent.values()[i]) - parent.latent.values()[i]);
        if (step > c.delta) {
          fail(o, tag + "edge " + std::to_string(r.identity_id) + " step " + fmt("%.9g", step) + " > delta");
          break;
        }
      }
    }
    for (const auto& [seed, n] : per_seed)
      if (n > c.max_iter) fail(o, tag + "seed " + std::to_string(seed) + " accepted " + std::to_string(n));
    if (!man.completed()) fail(o, tag + "did not complete");
    for (const auto& g : w->groups)
      if (man.per_group_counts.at(g.name()) != c.quota_for(g)) fail(o, tag + g.name() + " missed its quota");
  }
  if (o.pass)
    o.detail = std::to_string(kPropertyCampaigns) + " campaigns, " + std::to_string(records) + " records, " +
               std::to_string(edges) + " lineage edges";
  return o;
}

Outcome uniqueness() {
  const auto w = default_world();
  auto c = base_config(77);
  c.quota_per_group = kUniquenessIdentities / 2;
  c.max_iter = 10;
  const std::vector<GroupLabel> groups = {GroupLabel("Caucasian"), GroupLabel("African")};
  const auto man = run_campaign(groups, c, simulated_factory(w));
  SimulatedOracle oracle(w);
  Outcome o;
  if (man.records.size() != kUniquenessIdentities) fail(o, "campaign gave " + std::to_string(man.records.size()));
  const auto report = uniqueness_report(man, oracle);

  const auto m = test::to_reference(*w);
  std::vector<std::vector<double>> emb;
  for (const auto& r : man.records) emb.push_back(ref::classify(m, test::widen(r.latent.values())).embedding);
  const auto brute = ref::brute_force_pairs(emb, kDefaultMatchThreshold, true);
  if (report.pair_count != 19'900 || brute.pairs != 19'900) fail(o, "pair count " + std::to_string(report.pair_count));
  if (report.histogram != brute.histogram) fail(o, "histogram differs from brute force");
  if (report.duplicate_pairs != brute.duplicates) fail(o, "duplicate count differs from brute force");

  DatasetManifest twins = man;
  twins.records.resize(2);
  twins.records[1].latent = twins.records[0].latent;
  const auto t = uniqueness_report(twins, oracle);
  if (t.pair_count != 1 || t.histogram.back() != 1 || t.duplicate_pairs != 1)
    fail(o, "identical latents not reported as a similarity-1.0 duplicate");
  if (o.pass)
    o.detail = "19900 pairs, histogram identical, " + std::to_string(report.duplicate_pairs) +
               " duplicates; twins duplicate";
  return o;
}

Outcome rejection_statistics() {
  const auto w = default_world();
  const auto mass = reference_mass(*w, kReferenceMassSamples, 0xfeed'0001);
  SimulatedOracle oracle(w);
  Outcome o;
  for (std::size_t k = 0; k < w->groups.size(); ++k) {
    Rng rng = make_rng(31, {stream::kRejection, k});
    const auto r = rejection_sample(oracle, w->groups[k], kRejectionTrials, kRejectionTrials, rng);
    const double trials = static_cast<double>(r.calls_used);
    const double rate = static_cast<double>(r.records.size()) / trials;
    const double p = mass[k];
    // Standard error of the difference between two independent proportions.
    const double se = std::sqrt(p * (1 - p) / trials + p * (1 - p) / kReferenceMassSamples);
    const double z = (rate - p) / se;
    o.detail += (o.detail.empty() ? "" : " ") + w->groups[k].name() + " z=" + fmt("%+.2f", z);
    if (r.calls_used != kRejectionTrials) fail(o, w->groups[k].name() + " used " + std::to_string(r.calls_used));
    if (std::abs(z) > kRejectionSigmas) fail(o, w->groups[k].name() + " |z|=" + fmt("%.2f", std::abs(z)));
  }
  return o;
}

struct Killed {};

Outcome checkpoint_equivalence() {
  const auto w = default_world();
  const auto factory = simulated_factory(w);
  auto c = base_config(4242);
  c.quota_per_group = 8;
  c.max_iter = 3;
  test::TempDir dir;
  Outcome o;
  std::uint64_t resumes = 0;
  for (std::size_t workers : {std::size_t{1}, std::size_t{3}}) {
    CampaignOptions base;
    base.workers = workers;
    std::uint64_t chains = 0;
    base.on_checkpoint = [&](const DatasetManifest&) { ++chains; };
    const auto full = encode_manifest(run_campaign(w->groups, c, factory, base));
    for (std::uint64_t kill_at = 1; kill_at < chains; ++kill_at) {
      const auto ckpt = dir.file("run.ckpt");
      CampaignOptions killed;
      killed.workers = workers;
      killed.checkpoint_path = ckpt;
      std::uint64_t seen = 0;
      killed.on_checkpoint = [&](const DatasetManifest&) {
        if (++seen == kill_at) throw Killed{};
      };
      try {
        run_campaign(w->groups, c, factory, killed);
        fail(o, "kill at chain " + std::to_string(kill_at) + " did not stop the run");
        continue;
      } catch (const Killed&) {
      }
      CampaignOptions resume;
      resume.workers = workers;
      resume.resume_from = decode_checkpoint(test::slurp(ckpt));
      ++resumes;
      if (encode_manifest(run_campaign(w->groups, c, factory, resume)) != full)
        fail(o, "workers=" + std::to_string(workers) + " kill at chain " + std::to_string(kill_at) + " diverged");
    }
  }
  if (o.pass) o.detail = std::to_string(resumes) + " kill/resume points byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ad-metric", ad_metric},
      {"bias-calibration", bias_calibration},
      {"efficiency-direction", efficiency},
      {"search-properties", algorithm_properties},
      {"uniqueness-oracle", uniqueness},
      {"rejection-statistics", rejection_statistics},
      {"checkpoint-equivalence", checkpoint_equivalence},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
