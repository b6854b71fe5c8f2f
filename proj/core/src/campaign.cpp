#include "lforge/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "lforge/error.hpp"
#include "lforge/manifest_io.hpp"
#include "lforge/rng.hpp"
#include "lforge/search.hpp"
#include "lforge/text.hpp"

namespace lforge {
namespace {

struct LocalRecord {
  LatentVector latent;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> parent;
  std::uint32_t depth = 0;
  std::uint64_t call_index = 0;
  std::vector<LatentVector> variants;
};

struct GroupState {
  GroupLabel group;
  std::uint64_t index = 0;
  GroupProgress progress;
  std::vector<LocalRecord> records;
  std::uint64_t next_report = 0;
};

struct Header {
  std::string fingerprint;
  std::string oracle_id;
  std::uint64_t rng_seed = 0;
  LatentSpaceSpec space;
  std::string config_line;
};

DatasetManifest merge(const Header& h, const std::vector<GroupState>& states) {
  DatasetManifest m;
  m.config_fingerprint = h.fingerprint;
  m.oracle_id = h.oracle_id;
  m.rng_seed = h.rng_seed;
  m.space = h.space;
  m.config_line = h.config_line;
  std::uint64_t offset = 0;
  for (const auto& s : states) {
    m.groups.push_back(s.group);
    m.progress[s.group.name()] = s.progress;
    m.per_group_counts[s.group.name()] = s.records.size();
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const auto& lr = s.records[i];
      IdentityRecord r;
      r.identity_id = offset + i;
      r.group = s.group;
      r.latent = lr.latent;
      r.seed_id = offset + lr.seed;
      if (lr.parent) r.parent_id = offset + *lr.parent;
      r.depth = lr.depth;
      r.call_index = lr.call_index;
      if (!lr.variants.empty()) m.variant_latents[r.identity_id] = lr.variants;
      m.records.push_back(std::move(r));
    }
    offset += s.records.size();
  }
  return m;
}

std::vector<GroupState> split(const DatasetManifest& m, const std::vector<GroupLabel>& targets) {
  if (m.groups != targets) throw PreconditionError("checkpoint groups differ from the campaign's groups");
  const auto violations = validate_manifest(m);
  if (!violations.empty()) throw PreconditionError("checkpoint is inconsistent: " + violations.front());
  std::vector<GroupState> states;
  std::uint64_t offset = 0;
  for (std::size_t g = 0; g < targets.size(); ++g) {
    GroupState s{targets[g], g, m.progress.at(targets[g].name()), {}, 0};
    const auto count = m.per_group_counts.at(targets[g].name());
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto& r = m.records.at(offset + i);
      if (r.group != targets[g]) throw PreconditionError("checkpoint records are not grouped in campaign order");
      LocalRecord lr{r.latent, r.seed_id - offset, std::nullopt, r.depth, r.call_index, {}};
      if (r.parent_id) lr.parent = *r.parent_id - offset;
      if (auto it = m.variant_latents.find(r.identity_id); it != m.variant_latents.end()) lr.variants = it->second;
      s.records.push_back(std::move(lr));
    }
    offset += count;
    states.push_back(std::move(s));
  }
  return states;
}

std::string variation_canonical(const std::optional<VariationSpec>& spec) {
  if (!spec) return "none";
  std::ostringstream out;
  for (const auto& d : spec->directions) {
    out << to_string(d.kind) << ':';
    for (double m : d.magnitudes) out << format_double(m) << ',';
    out << ':';
    for (double x : d.vector) out << format_double(x) << ',';
    out << ';';
  }
  return out.str();
}

class CampaignRunner {
 public:
  CampaignRunner(const SearchConfig& config, const OracleFactory& oracles, const CampaignOptions& options,
                 Header header, std::vector<GroupState> states)
      : config_(config), oracles_(oracles), options_(options), header_(std::move(header)), states_(std::move(states)) {
    for (auto& s : states_) s.next_report = next_mark(s.records.size());
  }

  DatasetManifest run() {
    std::size_t workers = options_.workers == 0 ? states_.size() : options_.workers;
    workers = std::clamp<std::size_t>(workers, 1, states_.size());
    if (workers == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t i = 0; i < workers; ++i) pool.emplace_back([this] { work(); });
    }
    if (failure_) std::rethrow_exception(failure_);
    return merge(header_, states_);
  }

 private:
  std::uint64_t next_mark(std::uint64_t accepted) const {
    if (options_.progress_every == 0) return UINT64_MAX;
    return (accepted / options_.progress_every + 1) * options_.progress_every;
  }

  void work() {
    while (!stop_.load()) {
      const std::size_t task = next_task_.fetch_add(1);
      if (task >= states_.size()) return;
      try {
        run_group(task);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!failure_) failure_ = std::current_exception();
        stop_.store(true);
      }
    }
  }

  GroupState snapshot_of(std::size_t task) {
    std::lock_guard lock(mutex_);
    return states_[task];
  }

  void run_group(std::size_t task) {
    GroupState state = snapshot_of(task);
    if (state.progress.status != GroupStatus::running) return;
    auto oracle = oracles_();

    while (state.progress.status == GroupStatus::running && !stop_.load()) {
      const std::uint64_t have = state.records.size();
      if (have >= state.progress.quota) {
        state.progress.status = GroupStatus::complete;
        commit(task, state, {});
        break;
      }
      if (state.progress.calls_used >= config_.oracle_call_budget) {
        state.progress.status = GroupStatus::partial;
        commit(task, state, {});
        break;
      }
      run_chain(state, *oracle);
      if (state.records.size() >= state.progress.quota && state.progress.status == GroupStatus::running) {
        state.progress.status = GroupStatus::complete;
      }
      commit(task, state, header_.fingerprint);
    }
  }

  void run_chain(GroupState& state, Oracle& oracle) {
    const std::uint64_t remaining_budget = config_.oracle_call_budget - state.progress.calls_used;
    const std::uint64_t have = state.records.size();
    Rng rng = make_rng(header_.rng_seed, {stream::kCampaign, state.index, state.progress.chains});
    const std::uint64_t c0 = oracle.calls();
    ++state.progress.chains;

    std::optional<SeedResult> seed;
    try {
      seed = find_seed(oracle, state.group, remaining_budget, rng);
    } catch (const SeedNotFound&) {
      state.progress.calls_used += oracle.calls() - c0;
      state.progress.status = GroupStatus::partial;
      return;
    } catch (const OracleError&) {
      state.progress.calls_used += oracle.calls() - c0;
      state.progress.status = GroupStatus::partial;
      return;
    }
    ++state.progress.seeds_used;

    ExploreOptions eo;
    eo.max_accept = std::min<std::uint64_t>(config_.max_iter, state.progress.quota - have);
    eo.call_budget = remaining_budget - seed->calls;
    eo.first_id = have;
    eo.call_base = state.progress.calls_used + seed->calls;
    eo.seed_verified = true;
    eo.seed_call_index = state.progress.calls_used + seed->calls;
    const ExploreResult result = explore(seed->latent, state.group, config_, oracle, rng, eo);
    state.progress.calls_used += oracle.calls() - c0;

    for (const auto& r : result.records) {
      state.records.push_back({r.latent, r.seed_id, r.parent_id, r.depth, r.call_index, {}});
    }
    if (result.termination == Termination::oracle_error) {
      state.progress.status = GroupStatus::partial;
      return;
    }
    if (options_.variations) {
      const std::uint64_t v0 = oracle.calls();
      try {
        for (std::size_t i = have; i < state.records.size(); ++i) {
          state.records[i].variants = expand_identity(state.records[i].latent, *options_.variations, state.group, oracle);
        }
      } catch (const OracleError&) {
        state.progress.status = GroupStatus::partial;
      }
      state.progress.variant_calls += oracle.calls() - v0;
    }
  }

  void commit(std::size_t task, const GroupState& state, const std::string& checkpoint_tag) {
    std::lock_guard lock(mutex_);
    GroupState& slot = states_[task];
    const std::uint64_t before = slot.next_report;
    slot = state;
    slot.next_report = before;

    if (options_.on_progress) {
      const std::uint64_t accepted = slot.records.size();
      const bool finished = slot.progress.status != GroupStatus::running;
      if (accepted >= slot.next_report || finished) {
        options_.on_progress({slot.group, accepted, slot.progress.quota, slot.progress.calls_used,
                              slot.progress.status});
        slot.next_report = next_mark(accepted);
      }
    }
    if (checkpoint_tag.empty()) return;
    if (!options_.checkpoint_path.empty() || options_.on_checkpoint) {
      const DatasetManifest snapshot = merge(header_, states_);
      if (!options_.checkpoint_path.empty()) write_file_atomic(options_.checkpoint_path, encode_checkpoint(snapshot));
      if (options_.on_checkpoint) options_.on_checkpoint(snapshot);
    }
  }

  const SearchConfig& config_;
  const OracleFactory& oracles_;
  const CampaignOptions& options_;
  Header header_;
  std::vector<GroupState> states_;
  std::mutex mutex_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> next_task_{0};
  std::exception_ptr failure_;
};

}  // namespace

std::string campaign_fingerprint(const std::vector<GroupLabel>& targets, const SearchConfig& config,
                                 const std::string& oracle_id, const std::optional<VariationSpec>& variations) {
  std::string text = config.canonical() + "|" + oracle_id + "|";
  for (const auto& g : targets) text += g.name() + ",";
  text += "|" + variation_canonical(variations);
  return hex_digest(fnv1a(text));
}

DatasetManifest run_campaign(const std::vector<GroupLabel>& targets, const SearchConfig& config,
                             const OracleFactory& oracles, const CampaignOptions& options) {
  config.validate();
  if (targets.empty()) throw PreconditionError("campaign needs at least one target group");
  {
    std::vector<std::string> names;
    for (const auto& g : targets) names.push_back(g.name());
    make_label_set(names);
  }

  OracleInfo info;
  {
    auto probe = oracles();
    info = probe->info();
  }
  for (const auto& g : targets) {
    if (std::find(info.labels.begin(), info.labels.end(), g) == info.labels.end()) {
      throw PreconditionError("oracle has no group '" + g.name() + "'");
    }
  }
  if (options.variations) options.variations->validate(info.space.dim);

  Header header{campaign_fingerprint(targets, config, info.oracle_id, options.variations), info.oracle_id,
                config.rng_seed, info.space, config.canonical()};

  std::vector<GroupState> states;
  if (options.resume_from) {
    if (options.resume_from->config_fingerprint != header.fingerprint) {
      throw PreconditionError("checkpoint fingerprint " + options.resume_from->config_fingerprint +
                              " does not match campaign fingerprint " + header.fingerprint);
    }
    states = split(*options.resume_from, targets);
  } else {
    for (std::size_t g = 0; g < targets.size(); ++g) {
      GroupProgress p;
      p.quota = config.quota_for(targets[g]);
      states.push_back({targets[g], g, p, {}, 0});
    }
  }

  CampaignRunner runner(config, oracles, options, std::move(header), std::move(states));
  return runner.run();
}

}  // namespace lforge
