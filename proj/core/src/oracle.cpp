#include "lforge/oracle.hpp"

#include "lforge/error.hpp"

namespace lforge {

OracleVerdict Oracle::evaluate(const LatentVector& v) {
  if (v.space() != info().space) {
    throw PreconditionError("latent of dim " + std::to_string(v.dim()) + " does not match oracle space dim " +
                            std::to_string(info().space.dim));
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  return do_evaluate(v);
}

bool fitness(Oracle& oracle, const LatentVector& v, const GroupLabel& target) {
  const OracleVerdict verdict = oracle.evaluate(v);
  return verdict.face_detected && verdict.label && *verdict.label == target;
}

LatentVector sample_prior(const LatentSpaceSpec& space, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> values(space.dim);
  for (auto& x : values) x = static_cast<float>(normal(rng));
  return LatentVector(space, std::move(values));
}

}  // namespace lforge
