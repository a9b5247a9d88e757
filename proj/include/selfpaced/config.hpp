#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "selfpaced/trainer.hpp"

namespace selfpaced {

// Experiment config files use a TOML subset:
//
//   # comment
//   [section]
//   key = "string" | 12 | 0.5 | 1e-4 | true | [1, 2] | ["a", "b"]
//
// One key per line, no inline tables, no multi-line values. Every key must
// be a known field; anything else is rejected by name. Keys left out keep
// their defaults.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigField {
  std::string section;
  std::string key;
  std::string help;
};

/// Every accepted section.key, in file order.
const std::vector<ConfigField>& config_fields();

TrainConfig parse_config(std::string_view text, std::string_view source = "<string>");
TrainConfig load_config(const std::filesystem::path& path);

/// `section.key=value`. The value uses config syntax; for string fields a bare
/// word is also accepted.
void apply_override(TrainConfig& config, std::string_view assignment);

/// Full config with every field, parseable by parse_config to an identical value.
std::string to_toml(const TrainConfig& config);

/// Defaults and meaning of every key, for --help.
std::string config_reference();

}  // namespace selfpaced
