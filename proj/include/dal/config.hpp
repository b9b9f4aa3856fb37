#pragma once

// Flat `key = value` experiment configuration with `#` comments.
//
//   dataset      = mixture            # or: idx
//   strategies   = random, dal, coreset
//   initial_size = 100
//   budget       = 100
//   iterations   = 4
//
// List values are comma-separated; mixture means/variances separate
// components with `;` and coordinates with commas or spaces. See
// config_keys() for the full key table with defaults.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dal/harness.hpp"

namespace dal {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;  // empty: required (or conditionally required)
  std::string_view help;
};

const std::vector<ConfigKey>& config_keys();

using ConfigOverride = std::pair<std::string, std::string>;

/// Parses the text, applies overrides (later wins), fills defaults and
/// validates. Throws ConfigError naming the key and line on any problem.
ExperimentConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides = {});

/// Splits "key=value" from the command line.
ConfigOverride parse_override(std::string_view assignment);

/// Every resolved parameter as `key = value` lines; parse_config(echo_config(c))
/// reproduces c.
std::string echo_config(const ExperimentConfig& config);

}  // namespace dal
