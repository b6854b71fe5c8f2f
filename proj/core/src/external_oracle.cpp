#include "lforge/external_oracle.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "lforge/error.hpp"
#include "lforge/text.hpp"

extern char** environ;

namespace lforge {
namespace {

using nlohmann::json;

json parse_response(std::string_view line, std::uint64_t expected_id) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("response is not valid JSON", std::string(line));
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_unsigned() || !j.contains("ok") ||
      !j["ok"].is_boolean()) {
    throw ProtocolError("response lacks id/ok", std::string(line));
  }
  if (j["id"].get<std::uint64_t>() != expected_id) {
    throw ProtocolError("response id does not echo request " + std::to_string(expected_id), std::string(line));
  }
  if (!j["ok"].get<bool>()) {
    const std::string error = j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>() : "?";
    throw TransportError("oracle reported failure: " + error, expected_id);
  }
  return j;
}

}  // namespace

std::string encode_hello_request(std::uint64_t id) { return json{{"id", id}, {"op", "hello"}}.dump(); }

std::string encode_evaluate_request(std::uint64_t id, const LatentVector& v) {
  std::vector<double> latent(v.values().begin(), v.values().end());
  json j{{"id", id}, {"op", "evaluate"}, {"space", std::string(to_string(v.space().tag))}, {"latent", latent}};
  return j.dump();
}

HelloResponse decode_hello_response(std::string_view line, std::uint64_t expected_id) {
  const json j = parse_response(line, expected_id);
  HelloResponse out;
  try {
    out.version = j.at("version").get<std::string>();
    out.dim = j.at("dim").get<std::size_t>();
    out.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    out.labels = make_label_set(j.at("labels").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad hello response: ") + e.what(), std::string(line));
  } catch (const PreconditionError& e) {
    throw ProtocolError(std::string("bad hello labels: ") + e.what(), std::string(line));
  }
  if (out.version != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version '" + out.version + "'", std::string(line));
  }
  return out;
}

OracleVerdict decode_evaluate_response(std::string_view line, std::uint64_t expected_id) {
  const json j = parse_response(line, expected_id);
  OracleVerdict out;
  try {
    out.face_detected = j.at("face").get<bool>();
    if (j.contains("label") && !j["label"].is_null()) out.label = GroupLabel(j["label"].get<std::string>());
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      out.embedding = j["embedding"].get<std::vector<double>>();
    }
    out.validate();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad evaluate response: ") + e.what(), std::string(line));
  } catch (const PreconditionError& e) {
    throw ProtocolError(std::string("inconsistent verdict: ") + e.what(), std::string(line));
  }
  return out;
}

std::string encode_verdict_response(std::uint64_t id, const OracleVerdict& verdict) {
  json j{{"id", id}, {"ok", true}, {"face", verdict.face_detected}};
  j["label"] = verdict.label ? json(verdict.label->name()) : json(nullptr);
  j["embedding"] = verdict.embedding ? json(*verdict.embedding) : json(nullptr);
  return j.dump();
}

std::vector<std::string> split_command_line(std::string_view command) {
  std::vector<std::string> out;
  std::string current;
  bool in_quotes = false;
  bool have_word = false;
  for (char c : command) {
    if (c == '"') {
      in_quotes = !in_quotes;
      have_word = true;
    } else if (!in_quotes && (c == ' ' || c == '\t')) {
      if (have_word) out.push_back(std::move(current));
      current.clear();
      have_word = false;
    } else {
      current.push_back(c);
      have_word = true;
    }
  }
  if (in_quotes) throw PreconditionError("unbalanced quote in oracle command");
  if (have_word) out.push_back(std::move(current));
  return out;
}

ExternalOracle::ExternalOracle(ExternalOracleOptions options) : options_(std::move(options)) {
  if (options_.argv.empty()) throw PreconditionError("external oracle command is empty");

  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw TransportError(std::string("socketpair failed: ") + std::strerror(errno), 0);
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (auto& a : options_.argv) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    throw TransportError("cannot start oracle '" + options_.argv[0] + "': " + std::strerror(rc), 0);
  }
  fd_ = fds[0];
  pid_ = pid;

  try {
    const std::uint64_t id = next_id_++;
    send_line(encode_hello_request(id), id);
    const HelloResponse hello = decode_hello_response(read_line(id), id);
    if (hello.dim != options_.space.dim) {
      throw ProtocolError("oracle latent dim " + std::to_string(hello.dim) + " differs from configured " +
                              std::to_string(options_.space.dim),
                          "");
    }
    info_.kind = OracleKind::external;
    info_.space = options_.space;
    info_.labels = hello.labels;
    info_.embedding_dim = hello.embedding_dim;
    std::string joined;
    for (const auto& a : options_.argv) joined += a + " ";
    info_.oracle_id = "external-" + hex_digest(fnv1a(joined));
  } catch (...) {
    shut_down();
    throw;
  }
}

ExternalOracle::~ExternalOracle() { shut_down(); }

void ExternalOracle::shut_down() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(10'000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void ExternalOracle::send_line(const std::string& line, std::uint64_t id) {
  std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw TransportError(std::string("write to oracle failed: ") + std::strerror(errno), id);
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalOracle::read_line(std::uint64_t id) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + options_.timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (left.count() <= 0) {
      broken_ = true;
      throw TimeoutError("oracle did not answer request " + std::to_string(id) + " within " +
                         std::to_string(options_.timeout.count()) + " ms");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno), id);
    }
    if (ready == 0) continue;
    char chunk[65536];
    const auto n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw TransportError(std::string("read from oracle failed: ") + std::strerror(errno), id);
    }
    if (n == 0) {
      broken_ = true;
      if (!buffer_.empty()) throw ProtocolError("oracle closed mid-line", buffer_);
      throw TransportError("oracle closed its output", id);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

OracleVerdict ExternalOracle::do_evaluate(const LatentVector& v) {
  const std::uint64_t id = next_id_++;
  if (broken_) throw TransportError("oracle connection is unusable after an earlier failure", id);
  send_line(encode_evaluate_request(id, v), id);
  const std::string line = read_line(id);
  try {
    OracleVerdict verdict = decode_evaluate_response(line, id);
    if (verdict.embedding && verdict.embedding->size() != info_.embedding_dim) {
      throw ProtocolError("embedding has wrong dimension", line);
    }
    return verdict;
  } catch (const ProtocolError&) {
    broken_ = true;
    throw;
  }
}

OracleFactory external_factory(ExternalOracleOptions options) {
  return [options]() -> std::unique_ptr<Oracle> { return std::make_unique<ExternalOracle>(options); };
}

}  // namespace lforge
