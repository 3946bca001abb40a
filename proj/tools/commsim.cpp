// Command-line front end: simulate | bench-scaling | compare | detect.

#include <CLI11.hpp>

#include <iostream>

#include "commsim/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Community-integration simulation of network dynamical systems"};
  app.require_subcommand(1);
  app.fallthrough();

  commsim::CommandOptions opts;
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--config", opts.config_path, "run configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--jobs", opts.jobs, "worker threads for benchmark cells")->check(CLI::PositiveNumber);
  app.add_option("--out", opts.out_dir, "output directory");
  app.add_flag("--quiet", quiet, "suppress warnings");

  app.add_subcommand("simulate", "integrate a model and write its trajectory");
  app.add_subcommand("bench-scaling", "measure run time and kernel counts against N");
  app.add_subcommand("compare", "compare community-integration and naive right-hand sides");
  app.add_subcommand("detect", "detect communities and report the sparse remainder");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) opts.seed = seed;
  commsim::set_quiet(quiet);
  return commsim::run_command(app.get_subcommands().front()->get_name(), opts);
}
