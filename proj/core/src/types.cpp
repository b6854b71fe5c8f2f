#include "lforge/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lforge/error.hpp"
#include "lforge/text.hpp"

namespace lforge {

std::string_view to_string(SpaceTag tag) { return tag == SpaceTag::Z ? "Z" : "W"; }

SpaceTag parse_space_tag(std::string_view text) {
  if (text == "Z") return SpaceTag::Z;
  if (text == "W") return SpaceTag::W;
  throw PreconditionError("unknown latent space '" + std::string(text) + "'");
}

LatentSpaceSpec::LatentSpaceSpec(SpaceTag tag_, std::size_t dim_) : tag(tag_), dim(dim_) {
  if (dim == 0) throw PreconditionError("latent space dimension must be positive");
}

LatentVector::LatentVector(LatentSpaceSpec space, std::vector<float> values)
    : space_(space), values_(std::move(values)) {
  if (space_.dim == 0) throw PreconditionError("latent space dimension must be positive");
  if (values_.size() != space_.dim) {
    throw PreconditionError("latent has " + std::to_string(values_.size()) + " values, space dim is " +
                            std::to_string(space_.dim));
  }
  for (float x : values_) {
    if (!std::isfinite(x)) throw PreconditionError("latent contains a non-finite value");
  }
}

LatentVector LatentVector::from_doubles(LatentSpaceSpec space, std::span<const double> values) {
  std::vector<float> out(values.begin(), values.end());
  return LatentVector(space, std::move(out));
}

double euclidean_distance(const LatentVector& a, const LatentVector& b) {
  if (a.dim() != b.dim()) throw PreconditionError("distance between latents of different dims");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double chebyshev_distance(const LatentVector& a, const LatentVector& b) {
  if (a.dim() != b.dim()) throw PreconditionError("distance between latents of different dims");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return worst;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

GroupLabel::GroupLabel(std::string name) : name_(std::move(name)) {
  if (!is_identifier(name_)) throw PreconditionError("group label '" + name_ + "' is not an identifier");
}

std::vector<GroupLabel> make_label_set(const std::vector<std::string>& names) {
  if (names.empty()) throw PreconditionError("label set is empty");
  std::set<std::string> seen;
  std::vector<GroupLabel> out;
  for (const auto& name : names) {
    if (!seen.insert(name).second) throw PreconditionError("duplicate group label '" + name + "'");
    out.emplace_back(name);
  }
  return out;
}

std::vector<GroupLabel> default_labels() {
  return make_label_set({"Caucasian", "African", "Indian", "Asian", "Middle_Eastern", "Latino_Hispanic"});
}

std::uint64_t SearchConfig::quota_for(const GroupLabel& group) const {
  auto it = group_quota.find(group.name());
  return it == group_quota.end() ? quota_per_group : it->second;
}

std::uint64_t SearchConfig::effective_dequeue_cap() const {
  return dequeue_cap == 0 ? 100ULL * max_iter : dequeue_cap;
}

void SearchConfig::validate() const {
  if (n == 0) throw PreconditionError("n (mutations per expansion) must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw PreconditionError("delta must be a positive finite number");
  if (max_iter == 0) throw PreconditionError("max_iter must be >= 1");
  if (quota_per_group == 0) throw PreconditionError("quota_per_group must be >= 1");
  for (const auto& [name, q] : group_quota) {
    if (q == 0) throw PreconditionError("quota for group '" + name + "' must be >= 1");
  }
  if (oracle_call_budget == 0) throw PreconditionError("oracle_call_budget must be >= 1");
}

std::string SearchConfig::canonical() const {
  std::ostringstream out;
  out << "n=" << n << " delta=" << format_double(delta) << " max_iter=" << max_iter
      << " quota=" << quota_per_group << " budget=" << oracle_call_budget << " seed=" << rng_seed
      << " distance=euclidean dequeue_cap=" << effective_dequeue_cap();
  for (const auto& [name, q] : group_quota) out << " quota." << name << "=" << q;
  return out.str();
}

void OracleVerdict::validate() const {
  if (label && !face_detected) throw PreconditionError("verdict carries a label without a detected face");
  if (embedding) {
    double norm2 = 0.0;
    for (double x : *embedding) norm2 += x * x;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) throw PreconditionError("verdict embedding is not unit norm");
  }
}

std::string_view to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::pose: return "pose";
    case DirectionKind::expression: return "expression";
    case DirectionKind::illumination: return "illumination";
    case DirectionKind::custom: return "custom";
  }
  return "custom";
}

DirectionKind parse_direction_kind(std::string_view text) {
  if (text == "pose") return DirectionKind::pose;
  if (text == "expression") return DirectionKind::expression;
  if (text == "illumination") return DirectionKind::illumination;
  if (text == "custom") return DirectionKind::custom;
  throw PreconditionError("unknown variation direction '" + std::string(text) + "'");
}

void VariationSpec::validate(std::size_t dim) const {
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const auto& d = directions[i];
    const std::string where = "direction " + std::to_string(i) + " (" + std::string(to_string(d.kind)) + ")";
    if (d.vector.size() != dim) throw PreconditionError(where + " has wrong dimension");
    if (d.magnitudes.empty()) throw PreconditionError(where + " has no magnitudes");
    for (double m : d.magnitudes) {
      if (m == 0.0 || !std::isfinite(m)) throw PreconditionError(where + " has a zero or non-finite magnitude");
    }
    for (double x : d.vector) {
      if (!std::isfinite(x)) throw PreconditionError(where + " has a non-finite component");
    }
  }
}

std::string_view to_string(GroupStatus status) {
  switch (status) {
    case GroupStatus::running: return "running";
    case GroupStatus::complete: return "complete";
    case GroupStatus::partial: return "partial";
  }
  return "running";
}

GroupStatus parse_group_status(std::string_view text) {
  if (text == "running") return GroupStatus::running;
  if (text == "complete") return GroupStatus::complete;
  if (text == "partial") return GroupStatus::partial;
  throw PreconditionError("unknown group status '" + std::string(text) + "'");
}

bool DatasetManifest::completed() const {
  if (groups.empty()) return false;
  return std::all_of(groups.begin(), groups.end(), [&](const GroupLabel& g) {
    auto it = progress.find(g.name());
    return it != progress.end() && it->second.status == GroupStatus::complete;
  });
}

std::vector<std::string> validate_manifest(const DatasetManifest& m) {
  std::vector<std::string> out;
  std::map<std::string, std::uint64_t> recount;
  std::set<std::string> known;
  for (const auto& g : m.groups) {
    if (!known.insert(g.name()).second) out.push_back("group '" + g.name() + "' listed twice");
  }

  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const std::string who = "record " + std::to_string(r.identity_id);
    if (r.identity_id != i) out.push_back(who + ": id not dense/sequential (expected " + std::to_string(i) + ")");
    if (!known.count(r.group.name())) {
      out.push_back(who + ": group '" + r.group.name() + "' is not a campaign group");
    } else {
      ++recount[r.group.name()];
    }
    if (r.latent.space() != m.space) out.push_back(who + ": latent space differs from manifest space");
    if ((r.depth == 0) != !r.parent_id.has_value()) out.push_back(who + ": depth 0 must coincide with no parent");
    if (r.parent_id) {
      const auto pid = *r.parent_id;
      if (pid >= r.identity_id || pid >= m.records.size()) {
        out.push_back(who + ": parent " + std::to_string(pid) + " does not precede it");
        continue;
      }
      const auto& parent = m.records[pid];
      if (parent.depth + 1 != r.depth) out.push_back(who + ": depth is not parent depth + 1");
      if (parent.group != r.group) out.push_back(who + ": parent belongs to another group");
      if (parent.seed_id != r.seed_id) out.push_back(who + ": seed differs from parent's seed");
    } else if (r.seed_id != r.identity_id) {
      out.push_back(who + ": root record must be its own seed");
    }
  }

  for (const auto& g : m.groups) {
    const auto counted = recount[g.name()];
    auto it = m.per_group_counts.find(g.name());
    const auto stated = it == m.per_group_counts.end() ? 0 : it->second;
    if (stated != counted) {
      out.push_back("group '" + g.name() + "': count " + std::to_string(stated) + " but " + std::to_string(counted) +
                    " records");
    }
    auto p = m.progress.find(g.name());
    if (p != m.progress.end() && p->second.status == GroupStatus::complete && counted != p->second.quota) {
      out.push_back("group '" + g.name() + "': complete but has " + std::to_string(counted) + " of quota " +
                    std::to_string(p->second.quota));
    }
  }
  for (const auto& [name, count] : m.per_group_counts) {
    if (!known.count(name)) out.push_back("count given for unknown group '" + name + "'");
  }

  for (const auto& [id, variants] : m.variant_latents) {
    if (id >= m.records.size()) {
      out.push_back("variants for unknown identity " + std::to_string(id));
      continue;
    }
    for (const auto& v : variants) {
      if (v.space() != m.space) out.push_back("variant of identity " + std::to_string(id) + " has wrong space");
    }
  }
  return out;
}

}  // namespace lforge
