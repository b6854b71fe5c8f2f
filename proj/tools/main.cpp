#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "lforge/error.hpp"

int main(int argc, char** argv) {
  namespace cli = lforge::cli;
  CLI::App app{"lforge: demographically balanced synthetic identity generation"};
  app.require_subcommand(1);

  cli::GenerateArgs gen;
  std::size_t workers = 0;
  std::uint64_t progress_every = 0;
  auto* generate = app.add_subcommand("generate", "Run a quota-driven latent search campaign");
  generate->add_option("--config", gen.config_path, "Campaign config file")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out_path, "Manifest path; latents go to <out>.latents")->required();
  generate->add_flag("--resume", gen.resume, "Continue from the checkpoint if present");
  auto* workers_opt = generate->add_option("--workers", workers, "Concurrent group workers (0 = one per group)");
  auto* every_opt = generate->add_option("--progress-every", progress_every, "Report every N acceptances");

  cli::BaselineArgs base;
  auto* baseline = app.add_subcommand("baseline", "Compare rejection sampling against the search");
  baseline->add_option("--config", base.config_path, "Campaign config file")->required()->check(CLI::ExistingFile);
  baseline->add_option("--group", base.group, "Target group (default: every configured group)");
  baseline->add_option("--count", base.count, "Identities to collect per method")->required();
  baseline->add_option("--out", base.out_path, "Key/value report file");

  cli::AuditArgs aud;
  std::string threshold_text;
  auto* audit = app.add_subcommand("audit", "Audit a manifest or an accuracy table");
  audit->add_option("input", aud.input_path, "Manifest, or accuracy table for --kind ad")->required();
  audit->add_option("--kind", aud.kind, "uniqueness | balance | ad")
      ->required()
      ->check(CLI::IsMember({"uniqueness", "balance", "ad"}));
  audit->add_option("--config", aud.config_path, "Config naming the oracle (uniqueness)");
  auto* threshold_opt = audit->add_option("--threshold", threshold_text, "Match threshold (default 0.593)");
  audit->add_option("--orientation", aud.orientation, "higher | lower: which side of the threshold is a match");
  audit->add_option("--out", aud.out_path, "Key/value report; uniqueness also writes <out>.hist");

  cli::CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit a simulated world to target group shares");
  calibrate->add_option("targets", cal.targets_path, "\"group = share\" file")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", cal.out_path, "World JSON output")->required();
  calibrate->add_option("--config", cal.config_path, "World parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  try {
    if (*generate) {
      if (*workers_opt) gen.workers = workers;
      if (*every_opt) gen.progress_every = progress_every;
      return cli::cmd_generate(gen, std::cout, std::cerr);
    }
    if (*baseline) return cli::cmd_baseline(base, std::cout, std::cerr);
    if (*audit) {
      if (*threshold_opt) {
        try {
          aud.threshold = std::stod(threshold_text);
        } catch (const std::exception&) {
          std::cerr << "error: --threshold must be a number\n";
          return cli::kExitUsage;
        }
      }
      return cli::cmd_audit(aud, std::cout, std::cerr);
    }
    if (*calibrate) return cli::cmd_calibrate(cal, std::cout, std::cerr);
  } catch (const lforge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitFailure;
  }
  return cli::kExitUsage;
}
