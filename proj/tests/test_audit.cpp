#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lforge/audit.hpp"
#include "lforge/campaign.hpp"
#include "lforge/error.hpp"
#include "lforge/mixture_world.hpp"
#include "support/reference.hpp"

using namespace lforge;

namespace {

struct PrintedRow {
  const char* name;
  std::vector<double> acc;  // Indian, Asian, White, African
  double printed_ad;
};

// Real-data rows of the three RFW tables.
const std::vector<PrintedRow> kRealRows = {
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

AccuracyTable table_of(const std::vector<double>& acc) {
  static const char* names[] = {"Indian", "Asian", "White", "African", "E", "F", "G", "H"};
  AccuracyTable t;
  for (std::size_t i = 0; i < acc.size(); ++i) t.entries.emplace_back(GroupLabel(names[i]), acc[i]);
  return t;
}

class NoEmbeddingOracle final : public Oracle {
 public:
  NoEmbeddingOracle() {
    info_.space = LatentSpaceSpec::z(4);
    info_.labels = {GroupLabel("A")};
  }
  const OracleInfo& info() const override { return info_; }

 protected:
  OracleVerdict do_evaluate(const LatentVector&) override {
    OracleVerdict v;
    v.face_detected = true;
    v.label = GroupLabel("A");
    return v;
  }

 private:
  OracleInfo info_;
};

std::vector<std::vector<double>> random_unit_vectors(std::size_t n, std::size_t dim, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& v : out) {
    double n2 = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      n2 += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n2);
  }
  return out;
}

}  // namespace

TEST_CASE("AD reproduces every printed real-data row within 0.05") {
  for (const auto& row : kRealRows) {
    const double ad = accuracy_difference(table_of(row.acc));
    INFO(row.name << " AD " << ad << " printed " << row.printed_ad);
    CHECK(std::abs(ad - row.printed_ad) <= 0.05);
    CHECK(ad == ref::max_abs_difference(row.acc));
  }
}

TEST_CASE("AD arithmetic is exact on synthetic tables") {
  CHECK(accuracy_difference(table_of({50.0, 50.0, 50.0})) == 0.0);
  CHECK(accuracy_difference(table_of({12.5, 100.0, 0.25})) == 99.75);
  CHECK(accuracy_difference(table_of({82.52, 70.18})) == 82.52 - 70.18);
  CHECK_THROWS_AS(accuracy_difference(table_of({50.0})), PreconditionError);
  CHECK_THROWS_AS(accuracy_difference(table_of({50.0, 100.5})), PreconditionError);
  CHECK_THROWS_AS(accuracy_difference(AccuracyTable{}), PreconditionError);
}

TEST_CASE("AD is permutation- and shift-invariant") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> steps(0, 64 * 80);
  for (int trial = 0; trial < 500; ++trial) {
    // Multiples of 1/64 keep every sum and difference exact.
    std::vector<double> acc(2 + trial % 6);
    for (auto& a : acc) a = steps(rng) / 64.0;
    const double ad = accuracy_difference(table_of(acc));
    CHECK(ad == ref::max_abs_difference(acc));
    std::shuffle(acc.begin(), acc.end(), rng);
    CHECK(accuracy_difference(table_of(acc)) == ad);
    const double shift = steps(rng) % (64 * 20) / 64.0;
    for (auto& a : acc) a += shift;
    CHECK(accuracy_difference(table_of(acc)) == ad);
  }
}

TEST_CASE("accuracy table files") {
  const auto t = parse_accuracy_table("# ArcFace real\nIndian = 79.17\nAsian = 74.90\nWhite = 82.48\nAfrican = 73.80\n");
  REQUIRE(t.entries.size() == 4);
  CHECK(t.entries[2].first.name() == "White");
  try {
    parse_accuracy_table("A = 50\nB = lots\n");
    FAIL("non-numeric accuracy accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_accuracy_table("A = 50\nB = 101\n"), PreconditionError);
}

TEST_CASE("similarity bins") {
  CHECK(similarity_bin(-1.0) == 0);
  CHECK(similarity_bin(-1.5) == 0);
  CHECK(similarity_bin(-0.98) == 1);
  CHECK(similarity_bin(0.0) == 50);
  CHECK(similarity_bin(0.999) == 99);
  CHECK(similarity_bin(1.0) == 99);
  CHECK(similarity_bin(1.0000001) == 99);
}

TEST_CASE("uniqueness equals the brute-force pair loop") {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    const auto emb = random_unit_vectors(40 + seed * 30, 3 + seed, seed);
    for (bool higher : {true, false}) {
      UniquenessOptions o;
      o.orientation = higher ? ThresholdOrientation::higher_is_similar : ThresholdOrientation::lower_is_similar;
      const auto r = uniqueness_from_embeddings(emb, o);
      const auto b = ref::brute_force_pairs(emb, 0.593, higher);
      CHECK(r.pair_count == b.pairs);
      CHECK(r.histogram == b.histogram);
      CHECK(r.duplicate_pairs == b.duplicates);
      CHECK(r.duplicate_rate == doctest::Approx(static_cast<double>(b.duplicates) / static_cast<double>(b.pairs)));
      std::uint64_t mass = 0;
      for (auto c : r.histogram) mass += c;
      CHECK(mass == emb.size() * (emb.size() - 1) / 2);
    }
  }
}

TEST_CASE("uniqueness edge cases") {
  const auto w = default_world();
  SimulatedOracle oracle(w);
  DatasetManifest m;
  m.space = w->space;
  m.groups = {GroupLabel("Caucasian")};
  IdentityRecord r;
  r.group = GroupLabel("Caucasian");
  r.latent = LatentVector::from_doubles(w->space, w->anchors[w->index_of(r.group)]);
  std::vector<float> shifted(r.latent.values().begin(), r.latent.values().end());
  shifted[0] += 0.5f;
  r.latent = LatentVector(w->space, shifted);
  m.records.push_back(r);

  const auto one = uniqueness_report(m, oracle);
  CHECK(one.identities == 1);
  CHECK(one.pair_count == 0);
  CHECK(one.duplicate_rate == 0.0);

  r.identity_id = 1;
  r.seed_id = 1;
  m.records.push_back(r);
  const auto two = uniqueness_report(m, oracle);
  CHECK(two.pair_count == 1);
  CHECK(two.duplicate_pairs == 1);
  CHECK(two.histogram[99] == 1);

  UniquenessOptions lower;
  lower.orientation = ThresholdOrientation::lower_is_similar;
  CHECK(uniqueness_report(m, oracle, lower).duplicate_pairs == 1);

  NoEmbeddingOracle blind;
  DatasetManifest tiny;
  tiny.space = LatentSpaceSpec::z(4);
  CHECK_THROWS_AS(uniqueness_report(tiny, blind), UnsupportedAudit);
}

TEST_CASE("uniqueness on a simulated campaign matches the reference embeddings") {
  const auto w = default_world();
  SearchConfig c;
  c.rng_seed = 21;
  c.quota_per_group = 20;
  const auto m = run_campaign(w->groups, c, simulated_factory(w));
  SimulatedOracle oracle(w);
  const auto r = uniqueness_report(m, oracle);
  const auto mix = [&] {
    ref::Mixture x{w->anchors, w->spreads, w->weights, w->log_detect_threshold, w->projection};
    return x;
  }();
  std::vector<std::vector<double>> emb;
  for (const auto& rec : m.records) {
    emb.push_back(ref::classify(mix, std::vector<double>(rec.latent.values().begin(), rec.latent.values().end())).embedding);
  }
  const auto b = ref::brute_force_pairs(emb, 0.593, true);
  CHECK(r.pair_count == 120 * 119 / 2);
  CHECK(r.pair_count == b.pairs);
  CHECK(r.histogram == b.histogram);
  CHECK(r.duplicate_pairs == b.duplicates);
}

TEST_CASE("report formats") {
  UniquenessReport r;
  r.identities = 3;
  r.pair_count = 3;
  r.duplicate_pairs = 1;
  r.duplicate_rate = 1.0 / 3.0;
  r.histogram[0] = 2;
  r.histogram[99] = 1;
  const auto kv = format_uniqueness_kv(r);
  CHECK(kv.find("pair_count=3\n") != std::string::npos);
  CHECK(kv.find("threshold=0.593\n") != std::string::npos);
  CHECK(kv.find("orientation=higher\n") != std::string::npos);
  const auto hist = format_histogram(r);
  CHECK(hist.rfind("-1.00 2\n", 0) == 0);
  CHECK(hist.find("0.98 1\n") != std::string::npos);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 100);
  CHECK(format_uniqueness_text(r).find("duplicate rate  0.333333") != std::string::npos);
}

TEST_CASE("balance: complete campaigns are uniform, partial ones are flagged") {
  const auto w = default_world();
  SearchConfig c;
  c.rng_seed = 22;
  c.quota_per_group = 10;
  const auto m = run_campaign(w->groups, c, simulated_factory(w));
  const auto b = balance_report(m);
  REQUIRE(b.size() == 6);
  for (const auto& [g, e] : b) {
    CHECK(e.count == 10);
    CHECK(e.share == doctest::Approx(1.0 / 6.0));
    CHECK_FALSE(e.deviates);
    CHECK(e.count == m.per_group_counts.at(g));
  }
  CHECK(format_balance_kv(m, b).find("group=Caucasian count=10 share=0.16666666666666666 deviates=false\n") == 0);

  SearchConfig starved = c;
  starved.oracle_call_budget = 30;
  const auto p = run_campaign(w->groups, starved, simulated_factory(w));
  const auto pb = balance_report(p);
  CHECK(pb.at("Indian").deviates);
  for (const auto& [g, e] : pb) CHECK(e.count == p.per_group_counts.at(g));
}
