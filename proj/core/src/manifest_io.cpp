#include "lforge/manifest_io.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "lforge/error.hpp"
#include "lforge/text.hpp"

namespace lforge {
namespace {

constexpr char kSidecarMagic[7] = {'L', 'F', 'O', 'R', 'G', 'E', '1'};

void check_token(const std::string& value, const char* what) {
  if (value.empty() || value.find_first_of(" \t\n=") != std::string::npos) {
    throw PreconditionError(std::string(what) + " '" + value + "' cannot be encoded");
  }
}

std::string encode_body(std::string_view tag, const DatasetManifest& m) {
  check_token(m.config_fingerprint, "fingerprint");
  check_token(m.oracle_id, "oracle_id");
  std::ostringstream out;
  out << tag << " version=" << kManifestVersion << " fingerprint=" << m.config_fingerprint
      << " oracle_id=" << m.oracle_id << " rng_seed=" << m.rng_seed << '\n';
  out << "space tag=" << to_string(m.space.tag) << " dim=" << m.space.dim << '\n';
  if (!m.config_line.empty()) out << "config " << m.config_line << '\n';
  for (const auto& g : m.groups) {
    const auto pit = m.progress.find(g.name());
    const GroupProgress p = pit == m.progress.end() ? GroupProgress{} : pit->second;
    const auto cit = m.per_group_counts.find(g.name());
    out << "group name=" << g.name() << " quota=" << p.quota
        << " count=" << (cit == m.per_group_counts.end() ? 0 : cit->second) << " seeds=" << p.seeds_used
        << " chains=" << p.chains << " calls=" << p.calls_used << " variant_calls=" << p.variant_calls
        << " status=" << to_string(p.status) << '\n';
  }
  for (const auto& r : m.records) {
    out << "record id=" << r.identity_id << " group=" << r.group.name() << " seed=" << r.seed_id
        << " parent=" << (r.parent_id ? std::to_string(*r.parent_id) : std::string("-")) << " depth=" << r.depth
        << " call=" << r.call_index << " latent=" << join_floats(r.latent.values()) << '\n';
  }
  for (const auto& [id, variants] : m.variant_latents) {
    for (const auto& v : variants) out << "variant id=" << id << " latent=" << join_floats(v.values()) << '\n';
  }
  return out.str();
}

DatasetManifest decode_body(std::string_view text, std::string_view expected_tag, std::string_view* trailer) {
  DatasetManifest m;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  bool have_space = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      throw ParseError("unterminated final line", line_no + 1, end - start + 1);
    }
    const std::string_view line = text.substr(start, end - start);
    ++line_no;
    try {
      const KeyValueLine kv = parse_kv_line(line);
      if (!have_header) {
        if (kv.tag != expected_tag) throw PreconditionError("expected '" + std::string(expected_tag) + "' header");
        if (parse_u64(kv.get("version")) != static_cast<std::uint64_t>(kManifestVersion)) {
          throw PreconditionError("unsupported manifest version " + kv.get("version"));
        }
        m.config_fingerprint = kv.get("fingerprint");
        m.oracle_id = kv.get("oracle_id");
        m.rng_seed = parse_u64(kv.get("rng_seed"));
        have_header = true;
      } else if (kv.tag == "space") {
        m.space = LatentSpaceSpec(parse_space_tag(kv.get("tag")), parse_u64(kv.get("dim")));
        have_space = true;
      } else if (kv.tag == "config") {
        m.config_line = std::string(trim(line.substr(std::string_view("config").size())));
      } else if (kv.tag == "group") {
        GroupLabel g(kv.get("name"));
        GroupProgress p;
        p.quota = parse_u64(kv.get("quota"));
        p.seeds_used = parse_u64(kv.get("seeds"));
        p.chains = parse_u64(kv.get("chains"));
        p.calls_used = parse_u64(kv.get("calls"));
        p.variant_calls = parse_u64(kv.get("variant_calls"));
        p.status = parse_group_status(kv.get("status"));
        m.per_group_counts[g.name()] = parse_u64(kv.get("count"));
        m.progress[g.name()] = p;
        m.groups.push_back(std::move(g));
      } else if (kv.tag == "record") {
        if (!have_space) throw PreconditionError("record before space line");
        IdentityRecord r;
        r.identity_id = parse_u64(kv.get("id"));
        r.group = GroupLabel(kv.get("group"));
        r.seed_id = parse_u64(kv.get("seed"));
        const auto& parent = kv.get("parent");
        if (parent != "-") r.parent_id = parse_u64(parent);
        r.depth = static_cast<std::uint32_t>(parse_u64(kv.get("depth")));
        r.call_index = parse_u64(kv.get("call"));
        r.latent = LatentVector(m.space, parse_float_list(kv.get("latent")));
        m.records.push_back(std::move(r));
      } else if (kv.tag == "variant") {
        if (!have_space) throw PreconditionError("variant before space line");
        m.variant_latents[parse_u64(kv.get("id"))].emplace_back(m.space, parse_float_list(kv.get("latent")));
      } else if (kv.tag == "frontier" && trailer != nullptr) {
        *trailer = text.substr(start);
        return m;
      } else {
        throw PreconditionError("unknown line tag '" + kv.tag + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no, 1);
    }
    start = end + 1;
  }
  if (!have_header) throw ParseError("missing header line", 1, 1);
  if (!have_space) throw ParseError("missing space line", line_no, 1);
  if (trailer != nullptr) throw ParseError("checkpoint lacks frontier digest", line_no, 1);
  return m;
}

template <typename T>
void put_le(std::vector<char>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "sidecar writer assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get_le(const std::vector<char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw PreconditionError("latent sidecar is truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode_manifest(const DatasetManifest& manifest) { return encode_body(kManifestTag, manifest); }

DatasetManifest decode_manifest(std::string_view text) { return decode_body(text, kManifestTag, nullptr); }

std::string encode_checkpoint(const DatasetManifest& state) {
  std::string body = encode_body(kCheckpointTag, state);
  body += "frontier digest=" + hex_digest(fnv1a(body)) + "\n";
  return body;
}

DatasetManifest decode_checkpoint(std::string_view text) {
  std::string_view trailer;
  DatasetManifest m = decode_body(text, kCheckpointTag, &trailer);
  const std::string_view body = text.substr(0, text.size() - trailer.size());
  const KeyValueLine kv = parse_kv_line(trim(trailer));
  if (!kv.has("digest") || kv.get("digest") != hex_digest(fnv1a(body))) {
    throw ParseError("checkpoint frontier digest mismatch", 0, 1);
  }
  return m;
}

std::vector<char> encode_latent_sidecar(const DatasetManifest& manifest) {
  std::vector<char> out(kSidecarMagic, kSidecarMagic + sizeof kSidecarMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(manifest.space.dim));
  put_le<std::uint64_t>(out, manifest.records.size());
  out.reserve(out.size() + manifest.records.size() * manifest.space.dim * 4);
  for (const auto& r : manifest.records) {
    for (float x : r.latent.values()) put_le<float>(out, x);
  }
  return out;
}

LatentTable decode_latent_sidecar(const std::vector<char>& bytes) {
  if (bytes.size() < sizeof kSidecarMagic || std::memcmp(bytes.data(), kSidecarMagic, sizeof kSidecarMagic) != 0) {
    throw PreconditionError("latent sidecar has a bad magic");
  }
  std::size_t pos = sizeof kSidecarMagic;
  LatentTable table;
  table.dim = get_le<std::uint32_t>(bytes, pos);
  const auto rows = get_le<std::uint64_t>(bytes, pos);
  table.rows.reserve(rows);
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::vector<float> row(table.dim);
    for (auto& x : row) x = get_le<float>(bytes, pos);
    table.rows.push_back(std::move(row));
  }
  if (pos != bytes.size()) throw PreconditionError("latent sidecar has trailing bytes");
  return table;
}

std::string encode_variation_spec(const VariationSpec& spec) {
  std::ostringstream out;
  for (const auto& d : spec.directions) {
    out << "direction kind=" << to_string(d.kind) << " magnitudes=";
    for (std::size_t i = 0; i < d.magnitudes.size(); ++i) out << (i ? "," : "") << format_double(d.magnitudes[i]);
    out << " vector=";
    for (std::size_t i = 0; i < d.vector.size(); ++i) out << (i ? "," : "") << format_double(d.vector[i]);
    out << '\n';
  }
  return out.str();
}

VariationSpec decode_variation_spec(std::string_view text, std::size_t dim) {
  VariationSpec spec;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    try {
      const KeyValueLine kv = parse_kv_line(line);
      if (kv.tag != "direction") throw PreconditionError("unknown line tag '" + kv.tag + "'");
      VariationDirection d;
      d.kind = parse_direction_kind(kv.get("kind"));
      d.magnitudes = parse_double_list(kv.get("magnitudes"));
      d.vector = parse_double_list(kv.get("vector"));
      spec.directions.push_back(std::move(d));
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no, 1);
    }
  }
  try {
    spec.validate(dim);
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), line_no, 1);
  }
  return spec;
}

}  // namespace lforge
