#pragma once

// Command implementations behind the `lforge` binary. Each returns a process
// exit code; progress and diagnostics go to `err`, results to `out` or files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lforge/oracle.hpp"
#include "lforge/types.hpp"

namespace lforge::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitPartial = 2,
  kExitCalibrationFailed = 3,
  kExitUsage = 64,
  kExitData = 65,
};

/// Everything a campaign needs, resolved from a flat "key = value" config file.
struct CampaignSetup {
  SearchConfig search;
  std::vector<GroupLabel> groups;
  OracleFactory oracles;
  std::optional<VariationSpec> variations;
  std::string checkpoint_path;
  std::size_t workers = 0;
  std::uint64_t progress_every = 0;
  /// Raw key/values for commands that read extra keys.
  std::vector<std::pair<std::string, std::string>> raw;
};

/// Throws ParseError (line/column) for malformed or unknown keys. LFORGE_SEED
/// in the environment overrides `seed`.
CampaignSetup load_setup(const std::string& config_path);
CampaignSetup parse_setup(const std::string& text, const std::string& base_dir);

struct GenerateArgs {
  std::string config_path;
  std::string out_path;
  bool resume = false;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> progress_every;
};

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

struct BaselineArgs {
  std::string config_path;
  std::string group;
  std::uint64_t count = 0;
  std::string out_path;
};

int cmd_baseline(const BaselineArgs& args, std::ostream& out, std::ostream& err);

struct AuditArgs {
  std::string input_path;
  std::string kind;
  std::string config_path;
  std::optional<double> threshold;
  std::string orientation = "higher";
  std::string out_path;
};

int cmd_audit(const AuditArgs& args, std::ostream& out, std::ostream& err);

struct CalibrateArgs {
  std::string targets_path;
  std::string out_path;
  std::string config_path;
};

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace lforge::cli
