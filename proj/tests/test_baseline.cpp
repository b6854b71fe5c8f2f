#include <doctest.h>

#include <cmath>

#include "lforge/baseline.hpp"
#include "lforge/error.hpp"
#include "lforge/mixture_world.hpp"
#include "lforge/text.hpp"

using namespace lforge;

namespace {

double mean_calls(const char* group, std::uint64_t count, int runs) {
  SimulatedOracle oracle(default_world());
  double total = 0.0;
  for (int r = 0; r < runs; ++r) {
    Rng rng = make_rng(static_cast<std::uint64_t>(r), {77});
    const auto out = rejection_sample(oracle, GroupLabel(group), count, 100'000'000, rng);
    REQUIRE_FALSE(out.partial);
    REQUIRE(out.records.size() == count);
    total += static_cast<double>(out.calls_used);
  }
  return total / runs;
}

}  // namespace

TEST_CASE("rejection sampling cost follows the geometric expectation") {
  const double majority = mean_calls("Caucasian", 100, 20);
  CHECK(majority >= 0.7 * 100 / 0.65);
  CHECK(majority <= 1.3 * 100 / 0.65);
  const double rare = mean_calls("Indian", 10, 10);
  CHECK(rare >= 0.5 * 10 / 0.0026);
  CHECK(rare <= 1.5 * 10 / 0.0026);
}

TEST_CASE("rejection records are fit and carry their call index") {
  SimulatedOracle oracle(default_world());
  Rng rng = make_rng(1);
  const auto out = rejection_sample(oracle, GroupLabel("African"), 5, 1'000'000, rng);
  REQUIRE(out.records.size() == 5);
  std::uint64_t last = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(out.records[i].identity_id == i);
    CHECK(out.records[i].depth == 0);
    CHECK(out.records[i].call_index > last);
    last = out.records[i].call_index;
    CHECK(fitness(oracle, out.records[i].latent, GroupLabel("African")));
  }
  CHECK(out.records.back().call_index == out.calls_used);
}

TEST_CASE("rejection sampling preconditions and budget exhaustion") {
  SimulatedOracle oracle(default_world());
  Rng rng = make_rng(2);
  CHECK_THROWS_AS(rejection_sample(oracle, GroupLabel("Indian"), 0, 10, rng), PreconditionError);
  CHECK_THROWS_AS(rejection_sample(oracle, GroupLabel("Martian"), 1, 10, rng), PreconditionError);
  const auto out = rejection_sample(oracle, GroupLabel("Indian"), 50, 100, rng);
  CHECK(out.partial);
  CHECK(out.calls_used == 100);
  CHECK(out.records.size() < 50);
}

TEST_CASE("compare_efficiency reports both costs and their ratio") {
  const auto w = default_world();
  SearchConfig c;
  c.rng_seed = 3;
  const auto r = compare_efficiency(GroupLabel("African"), 30, c, simulated_factory(w));
  CHECK(r.comparable);
  CHECK(r.count == 30);
  CHECK(r.rejection_calls >= 30);
  CHECK(r.search_calls >= 1);
  CHECK(r.ratio == doctest::Approx(static_cast<double>(r.rejection_calls) / static_cast<double>(r.search_calls)));
  CHECK(r.ratio > 1.0);
  const auto again = compare_efficiency(GroupLabel("African"), 30, c, simulated_factory(w));
  CHECK(again.rejection_calls == r.rejection_calls);
  CHECK(again.search_calls == r.search_calls);
  CHECK_THROWS_AS(compare_efficiency(GroupLabel("African"), 0, c, simulated_factory(w)), PreconditionError);
}

TEST_CASE("a starved comparison is flagged incomparable") {
  const auto w = default_world();
  SearchConfig c;
  c.oracle_call_budget = 20;
  const auto r = compare_efficiency(GroupLabel("Indian"), 100, c, simulated_factory(w));
  CHECK_FALSE(r.comparable);
  CHECK_FALSE(r.note.empty());
}

TEST_CASE("efficiency reports render as a table and key-value lines") {
  EfficiencyReport r;
  r.group = GroupLabel("Indian");
  r.count = 100;
  r.rejection_calls = 38'000;
  r.search_calls = 160;
  r.ratio = 237.5;
  r.rejection_seconds = 1.5;
  r.search_seconds = 0.25;
  const auto kv = format_efficiency_kv({r});
  CHECK(kv == "group=Indian count=100 rejection_calls=38000 search_calls=160 ratio=237.5 wall_seconds=1.5,0.25 "
              "comparable=true\n");
  const auto table = format_efficiency_table({r});
  CHECK(table.find("rejection_calls") != std::string::npos);
  CHECK(table.find("237.50") != std::string::npos);
}
