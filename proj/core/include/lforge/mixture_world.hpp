#pragma once

// Simulated biased latent world: an isotropic Gaussian mixture whose
// components are the demographic groups. A latent "contains a face" when the
// mixture density clears a threshold, and its label is the component with the
// largest weighted density.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lforge/oracle.hpp"
#include "lforge/rng.hpp"
#include "lforge/types.hpp"

namespace lforge {

struct MixtureWorld {
  LatentSpaceSpec space;
  std::vector<GroupLabel> groups;
  std::vector<std::vector<double>> anchors;
  std::vector<double> spreads;
  std::vector<double> weights;
  /// log of the detection threshold on the mixture density.
  double log_detect_threshold = 0.0;
  std::size_t embedding_dim = 0;
  /// embedding_dim x dim, orthonormal rows.
  std::vector<std::vector<double>> projection;
  std::uint64_t world_seed = 0;
  /// Largest relative calibration error reached, when calibrated.
  double calibration_error = 0.0;

  /// K >= 2, spreads > 0, weights sum to 1, projection orthonormal to 1e-6.
  void validate() const;
  std::string oracle_id() const;

  struct Classification {
    bool detected = false;
    std::size_t label = 0;
    double log_density = 0.0;
  };

  /// Squared distance from `v` to every anchor.
  void squared_distances(std::span<const float> v, std::span<double> out) const;
  Classification classify_from_squared_distances(std::span<const double> sq) const;
  Classification classify(std::span<const float> v) const;
  /// normalize(projection * (v - anchor[label])).
  std::vector<double> embed(std::span<const float> v, std::size_t label) const;
  OracleVerdict verdict(std::span<const float> v) const;

  std::size_t index_of(const GroupLabel& g) const;
};

struct WorldParams {
  LatentSpaceSpec space = LatentSpaceSpec::z(32);
  std::vector<GroupLabel> groups = default_labels();
  double anchor_radius = 3.0;
  double min_anchor_separation = 3.0;
  double spread = 1.0;
  /// Extra Mahalanobis radius past the typical shell (sqrt(dim)) where detection stops.
  double detect_margin = 4.0;
  std::size_t embedding_dim = 16;
  std::uint64_t seed = 20231017;
};

/// Anchors on a sphere, uniform weights, threshold and projection in place.
MixtureWorld make_world(const WorldParams& params);

/// Group shares of the prior measured on StyleGAN2, padded to six groups.
std::map<std::string, double> measured_bias_targets();

struct CalibrationResult {
  std::vector<double> weights;
  std::vector<double> relative_errors;
  double max_relative_error = 0.0;
  int rounds = 0;
};

inline constexpr int kMaxCalibrationRounds = 50;

/// Iterative proportional fitting of the component weights so each group's
/// share of prior samples matches `targets`. Uses one fixed Monte-Carlo sample
/// set for all rounds. Throws PreconditionError on bad targets and
/// CalibrationFailed after kMaxCalibrationRounds.
CalibrationResult calibrate_weights(const MixtureWorld& world, const std::map<std::string, double>& targets,
                                    std::size_t sample_budget, double tolerance, Rng& rng);

/// Monte-Carlo share of each group (index K = no face) under the prior.
std::vector<double> measure_group_mass(const MixtureWorld& world, std::size_t samples, Rng& rng);

/// Desk-scale world (dim 32) calibrated to measured_bias_targets(). Built once per process.
std::shared_ptr<const MixtureWorld> default_world();
/// Same construction at dim 512, embedding dim 128.
std::shared_ptr<const MixtureWorld> full_scale_world();

inline constexpr double kDefaultCalibrationTolerance = 0.05;
inline constexpr std::size_t kDefaultCalibrationSamples = 400'000;

/// World description as JSON text (the format the external bridge loads).
std::string world_to_json(const MixtureWorld& world);
MixtureWorld world_from_json(const std::string& text);

class SimulatedOracle final : public Oracle {
 public:
  explicit SimulatedOracle(std::shared_ptr<const MixtureWorld> world);

  const OracleInfo& info() const override { return info_; }
  const MixtureWorld& world() const { return *world_; }

 protected:
  OracleVerdict do_evaluate(const LatentVector& v) override;

 private:
  std::shared_ptr<const MixtureWorld> world_;
  OracleInfo info_;
};

OracleFactory simulated_factory(std::shared_ptr<const MixtureWorld> world);

}  // namespace lforge
