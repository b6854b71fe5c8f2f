#include "lforge/search.hpp"

#include <cmath>
#include <deque>

#include "lforge/error.hpp"

namespace lforge {

SeedResult find_seed(Oracle& oracle, const GroupLabel& target, std::uint64_t budget, Rng& rng) {
  if (budget == 0) throw PreconditionError("seed search budget must be >= 1");
  for (std::uint64_t calls = 1; calls <= budget; ++calls) {
    auto v = sample_prior(oracle.info().space, rng);
    if (fitness(oracle, v, target)) return {std::move(v), calls};
  }
  throw SeedNotFound(target.name(), budget);
}

std::vector<LatentVector> mutate(const LatentVector& parent, std::uint32_t n, double delta, Rng& rng) {
  if (n == 0) throw PreconditionError("mutation count must be >= 1");
  if (!(delta > 0.0)) throw PreconditionError("mutation half-range must be positive");
  std::uniform_real_distribution<double> step(-delta, delta);
  std::vector<LatentVector> out;
  out.reserve(n);
  const auto base = parent.values();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<float> values(base.size());
    for (std::size_t j = 0; j < base.size(); ++j) {
      float x = static_cast<float>(static_cast<double>(base[j]) + step(rng));
      // Keep the child inside the box after float rounding.
      const double lo = static_cast<double>(base[j]) - delta;
      const double hi = static_cast<double>(base[j]) + delta;
      if (static_cast<double>(x) < lo) x = std::nextafter(x, base[j]);
      if (static_cast<double>(x) > hi) x = std::nextafter(x, base[j]);
      values[j] = x;
    }
    out.emplace_back(parent.space(), std::move(values));
  }
  return out;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::queue_empty: return "queue-empty";
    case Termination::max_iter: return "max_iter";
    case Termination::budget: return "budget";
    case Termination::dequeue_cap: return "dequeue-cap";
    case Termination::oracle_error: return "oracle-error";
  }
  return "queue-empty";
}

namespace {

struct FrontierEntry {
  LatentVector latent;
  std::optional<std::uint64_t> parent_id;
  std::uint32_t depth = 0;
  double seed_distance = 0.0;
};

}  // namespace

ExploreResult explore(const LatentVector& seed, const GroupLabel& target, const SearchConfig& config, Oracle& oracle,
                      Rng& rng, const ExploreOptions& options) {
  config.validate();
  ExploreResult result;
  const std::uint64_t max_accept = options.max_accept == 0 ? config.max_iter : options.max_accept;
  const std::uint64_t dequeue_cap = config.effective_dequeue_cap();
  const std::uint64_t start_calls = oracle.calls();

  std::deque<FrontierEntry> queue;
  queue.push_back({seed, std::nullopt, 0, 0.0});
  bool at_seed = true;

  while (!queue.empty() && result.records.size() < max_accept) {
    if (result.dequeues >= dequeue_cap) {
      result.calls = oracle.calls() - start_calls;
      result.termination = Termination::dequeue_cap;
      return result;
    }
    FrontierEntry current = std::move(queue.front());
    queue.pop_front();
    ++result.dequeues;

    std::uint64_t call_index = options.seed_call_index;
    if (!(at_seed && options.seed_verified)) {
      if (oracle.calls() - start_calls >= options.call_budget) {
        result.calls = oracle.calls() - start_calls;
        result.termination = Termination::budget;
        return result;
      }
      OracleVerdict verdict;
      try {
        verdict = oracle.evaluate(current.latent);
      } catch (const OracleError& e) {
        result.calls = oracle.calls() - start_calls;
        result.termination = Termination::oracle_error;
        result.error = e.what();
        return result;
      }
      result.calls = oracle.calls() - start_calls;
      call_index = options.call_base + result.calls;
      if (!verdict.face_detected) {
        at_seed = false;
        continue;
      }
      if (!verdict.label || *verdict.label != target) {
        at_seed = false;
        continue;
      }
    }
    at_seed = false;

    IdentityRecord record;
    record.identity_id = options.first_id + result.records.size();
    record.group = target;
    record.latent = current.latent;
    record.seed_id = options.first_id;
    record.parent_id = current.parent_id;
    record.depth = current.depth;
    record.call_index = call_index;
    result.records.push_back(std::move(record));
    if (result.records.size() >= max_accept) break;

    const std::uint64_t parent_id = result.records.back().identity_id;
    for (auto& child : mutate(current.latent, config.n, config.delta, rng)) {
      const double d = euclidean_distance(child, seed);
      if (d > current.seed_distance) queue.push_back({std::move(child), parent_id, current.depth + 1, d});
    }
  }
  result.calls = oracle.calls() - start_calls;
  result.termination = result.records.size() >= max_accept ? Termination::max_iter : Termination::queue_empty;
  return result;
}

std::vector<LatentVector> expand_identity(const LatentVector& v, const VariationSpec& spec, const GroupLabel& target,
                                          Oracle& oracle) {
  spec.validate(v.dim());
  std::vector<LatentVector> kept;
  std::vector<double> moved(v.dim());
  for (const auto& direction : spec.directions) {
    for (double m : direction.magnitudes) {
      for (std::size_t i = 0; i < v.dim(); ++i) moved[i] = static_cast<double>(v[i]) + m * direction.vector[i];
      auto candidate = LatentVector::from_doubles(v.space(), moved);
      if (candidate == v) continue;
      if (fitness(oracle, candidate, target)) kept.push_back(std::move(candidate));
    }
  }
  return kept;
}

}  // namespace lforge
