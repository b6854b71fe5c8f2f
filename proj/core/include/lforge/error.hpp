#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lforge {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad count, bad label, dim mismatch...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: manifest, config, world or variation file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class SeedNotFound : public Error {
 public:
  SeedNotFound(const std::string& group, std::uint64_t calls)
      : Error("no seed found for group '" + group + "' after " + std::to_string(calls) + " oracle calls"),
        calls_(calls) {}

  std::uint64_t calls() const { return calls_; }

 private:
  std::uint64_t calls_;
};

class CalibrationFailed : public Error {
 public:
  CalibrationFailed(const std::string& what, std::vector<double> relative_errors)
      : Error(what), relative_errors_(std::move(relative_errors)) {}

  const std::vector<double>& relative_errors() const { return relative_errors_; }

 private:
  std::vector<double> relative_errors_;
};

/// Failure talking to an oracle: base of transport, protocol and timeout errors.
class OracleError : public Error {
 public:
  using Error::Error;
};

class TransportError : public OracleError {
 public:
  TransportError(const std::string& what, std::uint64_t request_id)
      : OracleError(what + " (request " + std::to_string(request_id) + ")"), request_id_(request_id) {}

  std::uint64_t request_id() const { return request_id_; }

 private:
  std::uint64_t request_id_;
};

class ProtocolError : public OracleError {
 public:
  ProtocolError(const std::string& what, std::string raw_line)
      : OracleError(what + ": '" + raw_line + "'"), raw_line_(std::move(raw_line)) {}

  const std::string& raw_line() const { return raw_line_; }

 private:
  std::string raw_line_;
};

class TimeoutError : public OracleError {
 public:
  using OracleError::OracleError;
};

class UnsupportedAudit : public Error {
 public:
  using Error::Error;
};

}  // namespace lforge
