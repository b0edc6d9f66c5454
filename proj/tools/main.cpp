#include "runner/commands.hpp"
#include "runner/config.hpp"
#include "runner/report.hpp"

#include "hyperlr/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace hyperlr;
using namespace hyperlr::runner;

int main(int argc, char** argv) {
  CLI::App app{"Linear response experiments on hyperbolic flows"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  int workers = 0;
  std::uint64_t seed_offset = 0;
  app.add_option("--config", config_path, "YAML experiment config (defaults when omitted)");
  app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  app.add_option("--workers", workers, "Worker threads (default: HYPERLR_WORKERS or hardware)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed-offset", seed_offset, "Added to every seed in the config");
  app.set_version_flag("--version", version_string());
  for (const auto& name : command_names()) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (workers > 0) worker_override().store(workers);
    ExperimentConfig config = config_path.empty() ? parse_config_text("{}", "<defaults>") : load_config(config_path);
    apply_seed_offset(config, seed_offset);
    const std::string out = out_dir.empty() ? config.output.dir : out_dir;
    return run_command(app.get_subcommands().front()->get_name(), config, out, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
