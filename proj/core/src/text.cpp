#include "lforge/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <type_traits>

#include "lforge/error.hpp"

namespace lforge {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_float(float value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string join_floats(std::span<const float> values) {
  std::string out;
  out.reserve(values.size() * 14);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += format_float(values[i]);
  }
  return out;
}

namespace {

template <typename T>
T parse_number(std::string_view text, const char* what) {
  text = trim(text);
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  bool bad = res.ec != std::errc() || res.ptr != text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) bad = bad || !std::isfinite(value);
  if (bad) {
    throw PreconditionError(std::string("invalid ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

double parse_double(std::string_view text) { return parse_number<double>(text, "number"); }
float parse_float(std::string_view text) { return parse_number<float>(text, "number"); }
std::uint64_t parse_u64(std::string_view text) { return parse_number<std::uint64_t>(text, "unsigned integer"); }

std::vector<float> parse_float_list(std::string_view text) {
  std::vector<float> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_float(part));
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part));
  return out;
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t state) {
  for (unsigned char c : data) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string hex_digest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

bool KeyValueLine::has(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KeyValueLine::get(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  throw PreconditionError("'" + tag + "' line lacks key '" + std::string(key) + "'");
}

KeyValueLine parse_kv_line(std::string_view line) {
  KeyValueLine out;
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string_view {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    const auto start = pos;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    return line.substr(start, pos - start);
  };
  out.tag = std::string(next_token());
  for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw PreconditionError("malformed field '" + std::string(tok) + "' in '" + out.tag + "' line");
    }
    out.fields.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
  }
  return out;
}

std::vector<Assignment> parse_assignments(std::string_view text) {
  std::vector<Assignment> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;

    const auto hash = line.find('#');
    const auto body = line.substr(0, hash);
    if (trim(body).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      const auto col = body.find_first_not_of(" \t") + 1;
      throw ParseError("expected 'key = value'", line_no, col);
    }
    const auto key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError("missing key before '='", line_no, eq + 1);
    for (const auto& a : out) {
      if (a.key == key) throw ParseError("duplicate key '" + std::string(key) + "'", line_no, body.find(key) + 1);
    }
    const auto rest = body.substr(eq + 1);
    const auto lead = rest.find_first_not_of(" \t");
    out.push_back({std::string(key), std::string(trim(rest)), line_no,
                   eq + 2 + (lead == std::string_view::npos ? 0 : lead)});
    if (end == text.size()) break;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw PreconditionError("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lforge
