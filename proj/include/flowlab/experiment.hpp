#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowlab {

// Overrides supplied on the command line; everything else comes from the
// JSON config (schemas/experiment_config.schema.json documents it).
struct RunOverrides {
  std::optional<std::string> out_prefix;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

// Exit codes: 0 = all invariants pass, 1 = a bound/invariant violated,
// 2 = configuration error. Writes <prefix>.report.json and <prefix>.table.csv.
int run_experiment(const std::string& config_path, const RunOverrides& overrides = {});

// Parses and validates only; returns the normalized experiment name.
// Throws ConfigError on invalid input.
std::string validate_config(const std::string& config_path);

// One line per built-in field kind.
std::vector<std::string> catalogue_lines();

}  // namespace flowlab
