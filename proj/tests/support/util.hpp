#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "lforge/mixture_world.hpp"
#include "reference.hpp"

namespace lforge::test {

inline ref::Mixture to_reference(const MixtureWorld& w) {
  return {w.anchors, w.spreads, w.weights, w.log_detect_threshold, w.projection};
}

inline std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("lforge-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

/// Runs a shell command with stdout/stderr captured through files in `dir`.
inline RunResult run(const std::string& command, const TempDir& dir, const std::string& env = "") {
  const auto out = dir.file("stdout.txt");
  const auto err = dir.file("stderr.txt");
  const std::string full = env + (env.empty() ? "" : " ") + command + " >" + out + " 2>" + err;
  const int status = std::system(full.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace lforge::test
