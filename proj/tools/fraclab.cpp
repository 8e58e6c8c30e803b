// Experiment runner: reproducible pipelines over the discrete fractional
// Schroedinger laboratory.  See README for config format and subcommands.

#include "fraclab/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"fraclab: fractional Schroedinger inverse-problem laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool blind = false, oracle = false, force = false;

  app.add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "override config seed");
  app.add_flag("--blind", blind, "strip interior data from exports");
  app.add_flag("--oracle", oracle, "enable truth-comparison stages");
  app.add_flag("--force", force, "accept golden drift");

  const std::vector<std::string> subs = {
      "forward",   "spectral-recover", "normalize", "potential",
      "entangle",  "heatcheck",        "geometry",  "gauge",
      "all",       "regen-golden"};
  for (const auto& s : subs) app.add_subcommand(s, "");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  fraclab::json config;
  try {
    config = fraclab::read_json_file(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  fraclab::RunOptions opt;
  if (seed_set) opt.seed_override = seed;
  opt.out_dir = out_dir;
  opt.blind = blind;
  opt.oracle = oracle;
  opt.force = force;

  const std::string name = app.get_subcommands().front()->get_name();
  return fraclab::run_subcommand(name, config, opt);
}
