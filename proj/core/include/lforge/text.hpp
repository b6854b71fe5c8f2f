#pragma once

// Small text helpers shared by the manifest, config and report encoders.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lforge {

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);
/// Nine significant digits; round-trips every float exactly.
std::string format_float(float value);
std::string join_floats(std::span<const float> values);

double parse_double(std::string_view text);
float parse_float(std::string_view text);
std::uint64_t parse_u64(std::string_view text);
std::vector<float> parse_float_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

/// FNV-1a 64-bit, rendered as 16 lowercase hex digits by hex_digest.
std::uint64_t fnv1a(std::string_view data, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t value);

/// One "tag key=value key=value" line. Keys keep their order of appearance.
struct KeyValueLine {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> fields;

  bool has(std::string_view key) const;
  /// Throws PreconditionError naming the key when it is absent.
  const std::string& get(std::string_view key) const;
};

KeyValueLine parse_kv_line(std::string_view line);

struct Assignment {
  std::string key;
  std::string value;
  std::size_t line = 0;
  /// 1-based column where the value starts.
  std::size_t column = 0;
};

/// Flat "key = value" file with '#' comments. Duplicate keys are an error.
/// Throws ParseError carrying line and column.
std::vector<Assignment> parse_assignments(std::string_view text);

std::string read_file(const std::string& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace lforge
