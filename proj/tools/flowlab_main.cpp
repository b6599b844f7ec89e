#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "flowlab/experiment.hpp"
#include "flowlab/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"flowlab: flow integration, Gaussian calculus and commutator experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_prefix;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* run = app.add_subcommand("run", "run an experiment config and write reports");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_prefix, "output path prefix");
  run->add_option("--threads", threads, "worker threads")->envname("FLOWLAB_THREADS");
  run->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* validate = app.add_subcommand("validate", "parse and validate a config");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();

  auto* catalogue = app.add_subcommand("catalogue", "list built-in fields");

  CLI11_PARSE(app, argc, argv);

  if (catalogue->parsed()) {
    for (const auto& line : flowlab::catalogue_lines()) std::printf("%s\n", line.c_str());
    return 0;
  }
  if (validate->parsed()) {
    try {
      const auto name = flowlab::validate_config(config_path);
      std::printf("ok: %s\n", name.c_str());
      return 0;
    } catch (const flowlab::ConfigError& e) {
      std::fprintf(stderr, "invalid config: %s\n", e.what());
      return 2;
    }
  }

  flowlab::RunOverrides overrides;
  if (!out_prefix.empty()) overrides.out_prefix = out_prefix;
  if (threads > 0) overrides.threads = threads;
  if (seed_set) overrides.seed = seed;
  return flowlab::run_experiment(config_path, overrides);
}
