#include "lforge/mixture_world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "lforge/error.hpp"
#include "lforge/text.hpp"

namespace lforge {
namespace {

double log_normal_norm(std::size_t dim, double spread) {
  return -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * spread * spread);
}

std::vector<double> random_direction(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Modified Gram-Schmidt, two passes per row.
std::vector<std::vector<double>> orthonormal_rows(std::size_t rows, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> out;
  out.reserve(rows);
  while (out.size() < rows) {
    auto row = random_direction(dim, rng);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& prev : out) {
        const double c = dot(row, prev);
        for (std::size_t i = 0; i < dim; ++i) row[i] -= c * prev[i];
      }
    }
    const double norm = std::sqrt(dot(row, row));
    if (norm < 1e-8) continue;
    for (auto& x : row) x /= norm;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> place_anchors(const WorldParams& p, Rng& rng) {
  constexpr int kMaxAttempts = 10'000;
  std::vector<std::vector<double>> anchors;
  int attempts = 0;
  while (anchors.size() < p.groups.size()) {
    if (++attempts > kMaxAttempts) throw PreconditionError("cannot place anchors with the requested separation");
    auto a = random_direction(p.space.dim, rng);
    for (auto& x : a) x *= p.anchor_radius;
    const bool far_enough = std::all_of(anchors.begin(), anchors.end(), [&](const auto& b) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(d2) >= p.min_anchor_separation;
    });
    if (far_enough) anchors.push_back(std::move(a));
  }
  return anchors;
}

}  // namespace

void MixtureWorld::validate() const {
  const std::size_t k = groups.size();
  if (k < 2) throw PreconditionError("mixture world needs at least two groups");
  if (anchors.size() != k || spreads.size() != k || weights.size() != k) {
    throw PreconditionError("mixture world component lists differ in length");
  }
  make_label_set([&] {
    std::vector<std::string> names;
    for (const auto& g : groups) names.push_back(g.name());
    return names;
  }());
  for (const auto& a : anchors) {
    if (a.size() != space.dim) throw PreconditionError("anchor dimension differs from latent dim");
  }
  for (double s : spreads) {
    if (!(s > 0.0)) throw PreconditionError("component spread must be positive");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw PreconditionError("component weight must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw PreconditionError("component weights do not sum to 1");
  if (embedding_dim == 0 || embedding_dim > space.dim) throw PreconditionError("embedding dim out of range");
  if (projection.size() != embedding_dim) throw PreconditionError("projection has wrong row count");
  for (std::size_t i = 0; i < embedding_dim; ++i) {
    if (projection[i].size() != space.dim) throw PreconditionError("projection row has wrong length");
    for (std::size_t j = 0; j <= i; ++j) {
      const double expect = i == j ? 1.0 : 0.0;
      if (std::abs(dot(projection[i], projection[j]) - expect) > 1e-6) {
        throw PreconditionError("projection rows are not orthonormal");
      }
    }
  }
}

std::string MixtureWorld::oracle_id() const { return "mixture-" + hex_digest(fnv1a(world_to_json(*this))); }

void MixtureWorld::squared_distances(std::span<const float> v, std::span<double> out) const {
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    const auto& a = anchors[k];
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = static_cast<double>(v[i]) - a[i];
      s += d * d;
    }
    out[k] = s;
  }
}

MixtureWorld::Classification MixtureWorld::classify_from_squared_distances(std::span<const double> sq) const {
  const std::size_t k = anchors.size();
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  double scores[64];
  std::vector<double> heap;
  double* score = scores;
  if (k > 64) {
    heap.resize(k);
    score = heap.data();
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double s2 = spreads[c] * spreads[c];
    score[c] = std::log(weights[c]) + log_normal_norm(space.dim, spreads[c]) - sq[c] / (2.0 * s2);
    if (score[c] > best) {
      best = score[c];
      best_k = c;
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) sum += std::exp(score[c] - best);
  Classification out;
  out.log_density = best + std::log(sum);
  out.detected = out.log_density >= log_detect_threshold;
  out.label = best_k;
  return out;
}

MixtureWorld::Classification MixtureWorld::classify(std::span<const float> v) const {
  std::vector<double> sq(anchors.size());
  squared_distances(v, sq);
  return classify_from_squared_distances(sq);
}

std::vector<double> MixtureWorld::embed(std::span<const float> v, std::size_t label) const {
  const auto& a = anchors.at(label);
  std::vector<double> diff(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) diff[i] = static_cast<double>(v[i]) - a[i];
  std::vector<double> e(embedding_dim);
  double norm2 = 0.0;
  for (std::size_t r = 0; r < embedding_dim; ++r) {
    e[r] = dot(projection[r], diff);
    norm2 += e[r] * e[r];
  }
  if (norm2 == 0.0) {
    // Exactly on the anchor: the direction is undefined, pick the first axis.
    std::fill(e.begin(), e.end(), 0.0);
    e[0] = 1.0;
    return e;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : e) x *= inv;
  return e;
}

OracleVerdict MixtureWorld::verdict(std::span<const float> v) const {
  const auto c = classify(v);
  OracleVerdict out;
  out.face_detected = c.detected;
  if (c.detected) {
    out.label = groups[c.label];
    out.embedding = embed(v, c.label);
  }
  return out;
}

std::size_t MixtureWorld::index_of(const GroupLabel& g) const {
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k] == g) return k;
  }
  throw PreconditionError("group '" + g.name() + "' is not part of this world");
}

MixtureWorld make_world(const WorldParams& p) {
  if (p.groups.size() < 2) throw PreconditionError("mixture world needs at least two groups");
  if (!(p.spread > 0.0)) throw PreconditionError("spread must be positive");
  Rng rng = make_rng(p.seed, {stream::kWorld});
  MixtureWorld w;
  w.space = p.space;
  w.groups = p.groups;
  w.world_seed = p.seed;
  w.anchors = place_anchors(p, rng);
  w.spreads.assign(p.groups.size(), p.spread);
  w.weights.assign(p.groups.size(), 1.0 / static_cast<double>(p.groups.size()));
  const double radius = std::sqrt(static_cast<double>(p.space.dim)) + p.detect_margin;
  w.log_detect_threshold = log_normal_norm(p.space.dim, p.spread) - 0.5 * radius * radius;
  w.embedding_dim = std::min(p.embedding_dim, p.space.dim);
  w.projection = orthonormal_rows(w.embedding_dim, p.space.dim, rng);
  w.validate();
  return w;
}

std::map<std::string, double> measured_bias_targets() {
  // 10,000 StyleGAN2 samples: >6500 Caucasian, 171 African, 26 Indian.
  std::map<std::string, double> t{{"Caucasian", 0.65}, {"African", 0.0171}, {"Indian", 0.0026}};
  // The rest is shared inversely to the rejection-sampling minutes per 1000 samples.
  const double leftover = 1.0 - (0.65 + 0.0171 + 0.0026);
  const double asian = 1.0 / 118.96;
  const double latino = 1.0 / 124.31;
  const double middle_eastern = 1.0 / 170.63;
  const double total = asian + latino + middle_eastern;
  t["Asian"] = leftover * asian / total;
  t["Latino_Hispanic"] = leftover * latino / total;
  t["Middle_Eastern"] = leftover * middle_eastern / total;
  return t;
}

namespace {

std::vector<double> target_vector(const MixtureWorld& world, const std::map<std::string, double>& targets) {
  if (targets.size() != world.groups.size()) {
    throw PreconditionError("calibration targets must name every world group exactly once");
  }
  std::vector<double> out;
  double total = 0.0;
  for (const auto& g : world.groups) {
    auto it = targets.find(g.name());
    if (it == targets.end()) throw PreconditionError("no calibration target for group '" + g.name() + "'");
    if (!(it->second > 0.0)) throw PreconditionError("calibration target for '" + g.name() + "' must be positive");
    out.push_back(it->second);
    total += it->second;
  }
  if (total > 1.0 + 1e-9) {
    throw PreconditionError("calibration targets sum to " + format_double(total) + ", above 1");
  }
  return out;
}

}  // namespace

CalibrationResult calibrate_weights(const MixtureWorld& world, const std::map<std::string, double>& targets,
                                    std::size_t sample_budget, double tolerance, Rng& rng) {
  const auto target = target_vector(world, targets);
  if (sample_budget < 100'000) throw PreconditionError("calibration needs a sample budget of at least 1e5");
  if (!(tolerance > 0.0)) throw PreconditionError("calibration tolerance must be positive");

  const std::size_t k = world.groups.size();
  std::vector<double> sq(sample_budget * k);
  for (std::size_t s = 0; s < sample_budget; ++s) {
    const auto v = sample_prior(world.space, rng);
    world.squared_distances(v.values(), std::span<double>(sq).subspan(s * k, k));
  }

  MixtureWorld trial = world;
  CalibrationResult result;
  std::vector<std::size_t> counts(k);
  for (int round = 1; round <= kMaxCalibrationRounds; ++round) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t s = 0; s < sample_budget; ++s) {
      const auto c = trial.classify_from_squared_distances(std::span<const double>(sq).subspan(s * k, k));
      if (c.detected) ++counts[c.label];
    }
    result.rounds = round;
    result.relative_errors.assign(k, 0.0);
    result.max_relative_error = 0.0;
    std::vector<double> estimate(k);
    for (std::size_t c = 0; c < k; ++c) {
      estimate[c] = static_cast<double>(counts[c]) / static_cast<double>(sample_budget);
      result.relative_errors[c] = std::abs(estimate[c] - target[c]) / target[c];
      result.max_relative_error = std::max(result.max_relative_error, result.relative_errors[c]);
    }
    result.weights = trial.weights;
    if (result.max_relative_error <= tolerance) return result;

    const double floor = 0.5 / static_cast<double>(sample_budget);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      trial.weights[c] *= target[c] / std::max(estimate[c], floor);
      total += trial.weights[c];
    }
    for (auto& w : trial.weights) w /= total;
  }
  throw CalibrationFailed("calibration did not converge in " + std::to_string(kMaxCalibrationRounds) +
                              " rounds (max relative error " + format_double(result.max_relative_error) + ")",
                          result.relative_errors);
}

std::vector<double> measure_group_mass(const MixtureWorld& world, std::size_t samples, Rng& rng) {
  std::vector<double> mass(world.groups.size() + 1, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto v = sample_prior(world.space, rng);
    const auto c = world.classify(v.values());
    mass[c.detected ? c.label : world.groups.size()] += 1.0;
  }
  for (auto& m : mass) m /= static_cast<double>(samples);
  return mass;
}

namespace {

std::shared_ptr<const MixtureWorld> calibrated_world(const WorldParams& params) {
  MixtureWorld w = make_world(params);
  Rng rng = make_rng(params.seed, {stream::kCalibration});
  const auto result =
      calibrate_weights(w, measured_bias_targets(), kDefaultCalibrationSamples, kDefaultCalibrationTolerance, rng);
  w.weights = result.weights;
  w.calibration_error = result.max_relative_error;
  w.validate();
  return std::make_shared<const MixtureWorld>(std::move(w));
}

}  // namespace

std::shared_ptr<const MixtureWorld> default_world() {
  static const auto world = calibrated_world(WorldParams{});
  return world;
}

std::shared_ptr<const MixtureWorld> full_scale_world() {
  static const auto world = [] {
    WorldParams p;
    p.space = LatentSpaceSpec::z(512);
    p.embedding_dim = 128;
    return calibrated_world(p);
  }();
  return world;
}

std::string world_to_json(const MixtureWorld& w) {
  nlohmann::json j;
  j["version"] = 1;
  j["space"] = std::string(to_string(w.space.tag));
  j["dim"] = w.space.dim;
  std::vector<std::string> names;
  for (const auto& g : w.groups) names.push_back(g.name());
  j["groups"] = names;
  j["anchors"] = w.anchors;
  j["spreads"] = w.spreads;
  j["weights"] = w.weights;
  j["log_detect_threshold"] = w.log_detect_threshold;
  j["embedding_dim"] = w.embedding_dim;
  j["projection"] = w.projection;
  j["world_seed"] = w.world_seed;
  j["calibration_error"] = w.calibration_error;
  return j.dump() + "\n";
}

MixtureWorld world_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw PreconditionError("unsupported world file version");
    MixtureWorld w;
    w.space = LatentSpaceSpec(parse_space_tag(j.at("space").get<std::string>()), j.at("dim").get<std::size_t>());
    w.groups = make_label_set(j.at("groups").get<std::vector<std::string>>());
    w.anchors = j.at("anchors").get<std::vector<std::vector<double>>>();
    w.spreads = j.at("spreads").get<std::vector<double>>();
    w.weights = j.at("weights").get<std::vector<double>>();
    w.log_detect_threshold = j.at("log_detect_threshold").get<double>();
    w.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    w.projection = j.at("projection").get<std::vector<std::vector<double>>>();
    w.world_seed = j.value("world_seed", std::uint64_t{0});
    w.calibration_error = j.value("calibration_error", 0.0);
    w.validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("invalid world file: ") + e.what());
  }
}

SimulatedOracle::SimulatedOracle(std::shared_ptr<const MixtureWorld> world) : world_(std::move(world)) {
  world_->validate();
  info_.kind = OracleKind::simulated;
  info_.oracle_id = world_->oracle_id();
  info_.space = world_->space;
  info_.labels = world_->groups;
  info_.embedding_dim = world_->embedding_dim;
}

OracleVerdict SimulatedOracle::do_evaluate(const LatentVector& v) { return world_->verdict(v.values()); }

OracleFactory simulated_factory(std::shared_ptr<const MixtureWorld> world) {
  world->validate();
  return [world]() -> std::unique_ptr<Oracle> { return std::make_unique<SimulatedOracle>(world); };
}

}  // namespace lforge
