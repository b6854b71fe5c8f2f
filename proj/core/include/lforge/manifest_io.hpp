#pragma once

// Text and binary encodings of DatasetManifest.
//
// Text: a versioned header line, then one self-describing "tag key=value ..."
// line per item (space, config, group, record, variant). Latent values are
// written with 9 significant digits, which round-trips float32 exactly.
//
// Sidecar: "LFORGE1" magic, u32 dim, u64 row count, then row-major
// little-endian float32 latents in record order.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lforge/types.hpp"

namespace lforge {

inline constexpr std::string_view kManifestTag = "lforge-manifest";
inline constexpr std::string_view kCheckpointTag = "lforge-checkpoint";
inline constexpr int kManifestVersion = 1;

std::string encode_manifest(const DatasetManifest& manifest);
/// Throws ParseError with the offending line number.
DatasetManifest decode_manifest(std::string_view text);

/// Manifest body under a checkpoint header, closed by a "frontier digest=..." line
/// covering every preceding byte.
std::string encode_checkpoint(const DatasetManifest& state);
/// Rejects truncated or tampered checkpoints (digest mismatch).
DatasetManifest decode_checkpoint(std::string_view text);

std::vector<char> encode_latent_sidecar(const DatasetManifest& manifest);

struct LatentTable {
  std::uint32_t dim = 0;
  std::vector<std::vector<float>> rows;
};

LatentTable decode_latent_sidecar(const std::vector<char>& bytes);

/// Variation directions, one "direction kind=pose magnitudes=-1,1 vector=..." line each.
std::string encode_variation_spec(const VariationSpec& spec);
/// Throws ParseError; the result is validated against `dim`.
VariationSpec decode_variation_spec(std::string_view text, std::size_t dim);

}  // namespace lforge
