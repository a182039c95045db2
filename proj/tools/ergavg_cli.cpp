#include <iostream>

#include <CLI11.hpp>

#include "ergavg/experiment.hpp"
#include "ergavg/presets.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weighted ergodic averages: scans, probes and adversary builds"};
  app.set_version_flag("--version", ergavg::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_prefix;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_prefix, "Output prefix; writes <prefix>.csv and <prefix>.meta");
  run->add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));

  app.add_subcommand("presets", "List measure, flow, spectral, correlation and observable presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (app.got_subcommand("presets")) {
    std::cout << ergavg::presets_text();
    return 0;
  }

  ergavg::RunOptions options;
  if (!out_prefix.empty()) options.out_prefix = out_prefix;
  options.exec.threads = threads;
  const ergavg::RunResult result = ergavg::run_experiment_file(config_path, options);
  if (result.exit_code == 0)
    std::cout << result.message << '\n';
  else
    std::cerr << "ergavg: " << result.message << '\n';
  return result.exit_code;
}
