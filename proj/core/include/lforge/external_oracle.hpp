#pragma once

// Client for an oracle running as a child process. Requests and responses are
// single lines of JSON on the child's stdin/stdout:
//
//   -> {"id": 1, "op": "hello"}
//   <- {"id": 1, "ok": true, "version": "1", "dim": 512, "embedding_dim": 128, "labels": [...],
//       "face": false, "label": null, "embedding": null}
//   -> {"id": 2, "op": "evaluate", "space": "Z", "latent": [...]}
//   <- {"id": 2, "ok": true, "face": true, "label": "Asian", "embedding": [...]}
//   <- {"id": 2, "ok": false, "error": "..."}
//
// Responses come back in request order and echo the request id.

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lforge/oracle.hpp"

namespace lforge {

inline constexpr std::string_view kProtocolVersion = "1";

std::string encode_hello_request(std::uint64_t id);
std::string encode_evaluate_request(std::uint64_t id, const LatentVector& v);

struct HelloResponse {
  std::string version;
  std::size_t dim = 0;
  std::size_t embedding_dim = 0;
  std::vector<GroupLabel> labels;
};

/// Throws ProtocolError (raw line attached) on malformed JSON, wrong id or
/// missing fields, and TransportError when the oracle answers ok:false.
HelloResponse decode_hello_response(std::string_view line, std::uint64_t expected_id);
OracleVerdict decode_evaluate_response(std::string_view line, std::uint64_t expected_id);

/// Response line for a verdict; what a conforming oracle process writes.
std::string encode_verdict_response(std::uint64_t id, const OracleVerdict& verdict);

struct ExternalOracleOptions {
  std::vector<std::string> argv;
  LatentSpaceSpec space;
  std::chrono::milliseconds timeout{30'000};
};

/// Splits a command line on whitespace; double quotes group words.
std::vector<std::string> split_command_line(std::string_view command);

class ExternalOracle final : public Oracle {
 public:
  /// Spawns the child and completes the hello handshake.
  explicit ExternalOracle(ExternalOracleOptions options);
  ~ExternalOracle() override;

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  const OracleInfo& info() const override { return info_; }

 protected:
  OracleVerdict do_evaluate(const LatentVector& v) override;

 private:
  void send_line(const std::string& line, std::uint64_t id);
  std::string read_line(std::uint64_t id);
  void shut_down();

  ExternalOracleOptions options_;
  OracleInfo info_;
  int fd_ = -1;
  int pid_ = -1;
  std::uint64_t next_id_ = 1;
  std::string buffer_;
  bool broken_ = false;
};

OracleFactory external_factory(ExternalOracleOptions options);

}  // namespace lforge
