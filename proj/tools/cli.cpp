#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "lforge/audit.hpp"
#include "lforge/baseline.hpp"
#include "lforge/campaign.hpp"
#include "lforge/error.hpp"
#include "lforge/external_oracle.hpp"
#include "lforge/manifest_io.hpp"
#include "lforge/mixture_world.hpp"
#include "lforge/rng.hpp"
#include "lforge/text.hpp"

namespace lforge::cli {
namespace {

namespace fs = std::filesystem;

const std::set<std::string> kCampaignKeys = {
    "groups",  "quota",  "n",           "delta",          "max_iter",          "budget",     "seed",
    "dequeue_cap", "oracle", "world",   "oracle_command", "oracle_timeout_ms", "space",      "dim",
    "variations",  "workers", "progress_every", "checkpoint",
};

const std::set<std::string> kWorldKeys = {
    "space", "dim", "embedding_dim", "world_seed", "anchor_radius", "spread", "detect_margin",
    "calibration_samples", "calibration_tolerance",
};

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / path).string();
}

std::string dir_of(const std::string& path) { return fs::path(path).parent_path().string(); }

template <typename F>
auto at(const Assignment& a, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string(e.what()) + " for key '" + a.key + "'", a.line, a.column);
  }
}

std::vector<GroupLabel> parse_groups(const std::string& value) {
  std::vector<std::string> names;
  for (const auto& part : split(value, ',')) {
    const auto name = std::string(trim(part));
    if (!name.empty()) names.push_back(name);
  }
  return make_label_set(names);
}

std::shared_ptr<const MixtureWorld> load_world(const std::string& spec, const std::string& base_dir) {
  if (spec == "default") return default_world();
  if (spec == "full") return full_scale_world();
  auto w = world_from_json(read_file(resolve(base_dir, spec)));
  w.validate();
  return std::make_shared<const MixtureWorld>(std::move(w));
}

std::string read_input(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw PreconditionError("cannot open '" + path + "'");
  return read_file(path);
}

void write_text(const std::string& path, std::string_view text) { write_file_atomic(path, text); }

struct AbortHook {
  std::uint64_t after = 0;
  std::uint64_t seen = 0;
};

}  // namespace

CampaignSetup parse_setup(const std::string& text, const std::string& base_dir) {
  CampaignSetup setup;
  const auto assignments = parse_assignments(text);

  std::string oracle_kind = "simulated";
  std::string world_spec = "default";
  std::string command;
  std::uint64_t timeout_ms = 30'000;
  SpaceTag space_tag = SpaceTag::Z;
  std::size_t dim = 0;
  std::string variations_path;
  const Assignment* variations_at = nullptr;
  const Assignment* oracle_at = nullptr;
  std::optional<std::vector<GroupLabel>> groups;
  bool delta_set = false;

  for (const auto& a : assignments) {
    setup.raw.emplace_back(a.key, a.value);
    const std::string& k = a.key;
    const std::string& v = a.value;
    if (k.rfind("quota.", 0) == 0) {
      at(a, [&] {
        setup.search.group_quota[GroupLabel(k.substr(6)).name()] = parse_u64(v);
        return 0;
      });
      continue;
    }
    if (!kCampaignKeys.count(k)) throw ParseError("unknown key '" + k + "'", a.line, 1);
    at(a, [&] {
      if (k == "groups") groups = parse_groups(v);
      else if (k == "quota") setup.search.quota_per_group = parse_u64(v);
      else if (k == "n") setup.search.n = static_cast<std::uint32_t>(parse_u64(v));
      else if (k == "delta") setup.search.delta = parse_double(v), delta_set = true;
      else if (k == "max_iter") setup.search.max_iter = static_cast<std::uint32_t>(parse_u64(v));
      else if (k == "budget") setup.search.oracle_call_budget = parse_u64(v);
      else if (k == "seed") setup.search.rng_seed = parse_u64(v);
      else if (k == "dequeue_cap") setup.search.dequeue_cap = parse_u64(v);
      else if (k == "oracle") {
        if (v != "simulated" && v != "external") throw PreconditionError("oracle must be 'simulated' or 'external'");
        oracle_kind = v;
        oracle_at = &a;
      } else if (k == "world") world_spec = v;
      else if (k == "oracle_command") command = v;
      else if (k == "oracle_timeout_ms") timeout_ms = parse_u64(v);
      else if (k == "space") space_tag = parse_space_tag(v);
      else if (k == "dim") dim = parse_u64(v);
      else if (k == "variations") variations_path = v, variations_at = &a;
      else if (k == "workers") setup.workers = parse_u64(v);
      else if (k == "progress_every") setup.progress_every = parse_u64(v);
      else if (k == "checkpoint") setup.checkpoint_path = resolve(base_dir, v);
      return 0;
    });
  }

  if (const char* env = std::getenv("LFORGE_SEED"); env != nullptr && *env != '\0') {
    setup.search.rng_seed = parse_u64(env);
  }

  LatentSpaceSpec space;
  if (oracle_kind == "simulated") {
    auto world = load_world(world_spec, base_dir);
    space = world->space;
    if (dim != 0 && dim != space.dim) {
      throw ParseError("dim " + std::to_string(dim) + " does not match the world's " + std::to_string(space.dim),
                       oracle_at ? oracle_at->line : 1, 1);
    }
    if (!delta_set) {
      double mean = 0.0;
      for (double s : world->spreads) mean += s;
      setup.search.delta = 0.25 * mean / static_cast<double>(world->spreads.size());
    }
    setup.oracles = simulated_factory(world);
    if (!groups) groups = world->groups;
  } else {
    if (command.empty()) throw ParseError("external oracle needs oracle_command", oracle_at->line, 1);
    if (dim == 0) throw ParseError("external oracle needs dim", oracle_at->line, 1);
    space = LatentSpaceSpec(space_tag, dim);
    ExternalOracleOptions opts;
    opts.argv = split_command_line(command);
    opts.space = space;
    opts.timeout = std::chrono::milliseconds(timeout_ms);
    setup.oracles = external_factory(std::move(opts));
    if (!groups) groups = default_labels();
  }
  setup.groups = *groups;

  if (!variations_path.empty()) {
    const auto path = resolve(base_dir, variations_path);
    try {
      setup.variations = decode_variation_spec(read_input(path), space.dim);
    } catch (const ParseError& e) {
      throw ParseError("variations file '" + path + "': " + e.what(), variations_at->line, variations_at->column);
    } catch (const Error& e) {
      throw ParseError(e.what(), variations_at->line, variations_at->column);
    }
  }
  try {
    setup.search.validate();
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), assignments.empty() ? 1 : assignments.back().line, 1);
  }
  return setup;
}

CampaignSetup load_setup(const std::string& config_path) {
  return parse_setup(read_input(config_path), dir_of(config_path));
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  CampaignSetup setup;
  try {
    setup = load_setup(args.config_path);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  CampaignOptions options;
  options.workers = args.workers.value_or(setup.workers);
  options.progress_every = args.progress_every.value_or(setup.progress_every);
  options.variations = setup.variations;
  options.checkpoint_path = setup.checkpoint_path.empty() ? args.out_path + ".ckpt" : setup.checkpoint_path;

  if (args.resume && fs::exists(options.checkpoint_path)) {
    try {
      options.resume_from = decode_checkpoint(read_file(options.checkpoint_path));
    } catch (const Error& e) {
      err << "checkpoint '" << options.checkpoint_path << "' is unusable: " << e.what() << '\n';
      return kExitData;
    }
    err << "resuming from " << options.checkpoint_path << '\n';
  }

  options.on_progress = [&err](const ProgressEvent& e) {
    err << "progress group=" << e.group.name() << " accepted=" << e.accepted << "/" << e.quota
        << " calls=" << e.calls_used << " status=" << to_string(e.status) << '\n';
  };
  // Test hook: exit hard after N checkpointed chains, as if the process were killed.
  if (const char* env = std::getenv("LFORGE_ABORT_AFTER_CHAINS"); env != nullptr && *env != '\0') {
    auto hook = std::make_shared<AbortHook>();
    hook->after = parse_u64(env);
    options.on_checkpoint = [hook](const DatasetManifest&) {
      if (++hook->seen >= hook->after) {
        std::cerr.flush();
        std::_Exit(137);
      }
    };
  }

  DatasetManifest manifest;
  try {
    manifest = run_campaign(setup.groups, setup.search, setup.oracles, options);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return options.resume_from ? kExitData : kExitUsage;
  }
  write_text(args.out_path, encode_manifest(manifest));
  const auto sidecar = encode_latent_sidecar(manifest);
  write_text(args.out_path + ".latents", std::string_view(sidecar.data(), sidecar.size()));

  const bool complete = manifest.completed();
  for (const auto& g : manifest.groups) {
    const auto& p = manifest.progress.at(g.name());
    out << "group=" << g.name() << " count=" << manifest.per_group_counts.at(g.name()) << " quota=" << p.quota
        << " calls=" << p.calls_used << " status=" << to_string(p.status) << '\n';
  }
  return complete ? kExitOk : kExitPartial;
}

int cmd_baseline(const BaselineArgs& args, std::ostream& out, std::ostream& err) {
  if (args.count == 0) {
    err << "error: --count must be positive\n";
    return kExitUsage;
  }
  CampaignSetup setup;
  try {
    setup = load_setup(args.config_path);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<GroupLabel> groups;
  try {
    groups = args.group.empty() ? setup.groups : std::vector<GroupLabel>{GroupLabel(args.group)};
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<EfficiencyReport> reports;
  try {
    for (const auto& g : groups) {
      reports.push_back(compare_efficiency(g, args.count, setup.search, setup.oracles));
      err << "baseline group=" << g.name() << " done\n";
    }
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  out << format_efficiency_table(reports);
  if (!args.out_path.empty()) write_text(args.out_path, format_efficiency_kv(reports));
  bool comparable = true;
  for (const auto& r : reports) {
    if (!r.comparable) {
      comparable = false;
      err << "group " << r.group.name() << ": " << r.note << '\n';
    }
  }
  return comparable ? kExitOk : kExitPartial;
}

namespace {

// Loads and checks a manifest; prints every violation on failure.
std::optional<DatasetManifest> load_manifest(const std::string& path, std::ostream& err) {
  DatasetManifest m;
  try {
    m = decode_manifest(read_input(path));
  } catch (const Error& e) {
    err << "manifest '" << path << "': " << e.what() << '\n';
    return std::nullopt;
  }
  const auto problems = validate_manifest(m);
  if (!problems.empty()) {
    err << "manifest '" << path << "' is invalid:\n";
    for (const auto& p : problems) err << "  " << p << '\n';
    return std::nullopt;
  }
  return m;
}

}  // namespace

int cmd_audit(const AuditArgs& args, std::ostream& out, std::ostream& err) {
  if (args.kind == "ad") {
    AccuracyTable table;
    double ad = 0.0;
    try {
      table = parse_accuracy_table(read_input(args.input_path));
      ad = accuracy_difference(table);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", ad);
    out << "accuracy_difference=" << buf << '\n';
    if (!args.out_path.empty()) write_text(args.out_path, "accuracy_difference=" + format_double(ad) + "\n");
    return kExitOk;
  }
  if (args.kind != "uniqueness" && args.kind != "balance") {
    err << "error: unknown audit kind '" << args.kind << "'\n";
    return kExitUsage;
  }
  const auto manifest = load_manifest(args.input_path, err);
  if (!manifest) return kExitData;

  if (args.kind == "balance") {
    const auto text = format_balance_kv(*manifest, balance_report(*manifest));
    out << text;
    if (!args.out_path.empty()) write_text(args.out_path, text);
    return kExitOk;
  }

  UniquenessOptions opts;
  try {
    opts.orientation = parse_threshold_orientation(args.orientation);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (args.threshold) opts.threshold = *args.threshold;
  if (args.config_path.empty()) {
    err << "error: uniqueness audit needs --config naming the oracle\n";
    return kExitUsage;
  }
  CampaignSetup setup;
  try {
    setup = load_setup(args.config_path);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  UniquenessReport report;
  try {
    auto oracle = setup.oracles();
    if (oracle->info().space != manifest->space) {
      err << "error: manifest space does not match the oracle's\n";
      return kExitData;
    }
    report = uniqueness_report(*manifest, *oracle, opts);
  } catch (const UnsupportedAudit& e) {
    err << "unsupported: " << e.what() << '\n';
    return kExitUsage;
  }
  out << format_uniqueness_text(report);
  if (!args.out_path.empty()) {
    write_text(args.out_path, format_uniqueness_kv(report));
    write_text(args.out_path + ".hist", format_histogram(report));
  }
  return kExitOk;
}

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err) {
  std::map<std::string, double> targets;
  WorldParams params;
  std::size_t samples = kDefaultCalibrationSamples;
  double tolerance = kDefaultCalibrationTolerance;
  try {
    for (const auto& a : parse_assignments(read_input(args.targets_path))) {
      at(a, [&] {
        targets[GroupLabel(a.key).name()] = parse_double(a.value);
        return 0;
      });
    }
    if (!args.config_path.empty()) {
      SpaceTag tag = params.space.tag;
      std::size_t dim = params.space.dim;
      for (const auto& a : parse_assignments(read_input(args.config_path))) {
        if (!kWorldKeys.count(a.key)) throw ParseError("unknown key '" + a.key + "'", a.line, 1);
        at(a, [&] {
          if (a.key == "space") tag = parse_space_tag(a.value);
          else if (a.key == "dim") dim = parse_u64(a.value);
          else if (a.key == "embedding_dim") params.embedding_dim = parse_u64(a.value);
          else if (a.key == "world_seed") params.seed = parse_u64(a.value);
          else if (a.key == "anchor_radius") params.anchor_radius = parse_double(a.value);
          else if (a.key == "spread") params.spread = parse_double(a.value);
          else if (a.key == "detect_margin") params.detect_margin = parse_double(a.value);
          else if (a.key == "calibration_samples") samples = parse_u64(a.value);
          else if (a.key == "calibration_tolerance") tolerance = parse_double(a.value);
          return 0;
        });
      }
      params.space = LatentSpaceSpec(tag, dim);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<GroupLabel> groups;
  for (const auto& [name, share] : targets) groups.emplace_back(name);
  params.groups = groups;

  try {
    MixtureWorld world = make_world(params);
    Rng rng = make_rng(params.seed, {stream::kCalibration});
    const auto result = calibrate_weights(world, targets, samples, tolerance, rng);
    world.weights = result.weights;
    world.calibration_error = result.max_relative_error;
    write_text(args.out_path, world_to_json(world));
    out << "rounds=" << result.rounds << " max_relative_error=" << format_double(result.max_relative_error) << '\n';
    for (std::size_t i = 0; i < world.groups.size(); ++i) {
      out << "group=" << world.groups[i].name() << " weight=" << format_double(world.weights[i])
          << " relative_error=" << format_double(result.relative_errors[i]) << '\n';
    }
  } catch (const CalibrationFailed& e) {
    err << "calibration failed: " << e.what() << '\n';
    for (std::size_t i = 0; i < e.relative_errors().size() && i < groups.size(); ++i) {
      err << "  " << groups[i].name() << " relative_error=" << format_double(e.relative_errors()[i]) << '\n';
    }
    return kExitCalibrationFailed;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace lforge::cli
