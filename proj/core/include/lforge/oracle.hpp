#pragma once

// The generator + classifier + detector abstraction. Search code only ever
// talks to an Oracle; the simulated mixture world and the external-process
// client are the two implementations.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lforge/rng.hpp"
#include "lforge/types.hpp"

namespace lforge {

enum class OracleKind { simulated, external };

struct OracleInfo {
  OracleKind kind = OracleKind::simulated;
  std::string oracle_id;
  LatentSpaceSpec space;
  std::vector<GroupLabel> labels;
  /// 0 when the oracle never returns embeddings.
  std::size_t embedding_dim = 0;
};

/// One handle = one call counter (and, for external oracles, one connection).
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual const OracleInfo& info() const = 0;

  /// Rejects latents of the wrong space without counting the call.
  OracleVerdict evaluate(const LatentVector& v);

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual OracleVerdict do_evaluate(const LatentVector& v) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
};

/// Fitness indicator: 1 iff a face is detected and labelled `target`.
bool fitness(Oracle& oracle, const LatentVector& v, const GroupLabel& target);

/// Opens a fresh handle; campaigns call it once per worker.
using OracleFactory = std::function<std::unique_ptr<Oracle>()>;

/// i.i.d. standard normal per coordinate.
LatentVector sample_prior(const LatentSpaceSpec& space, Rng& rng);

}  // namespace lforge
