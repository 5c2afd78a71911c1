#pragma once

// JSON scenario configuration: parsing with key-level diagnostics, resolved
// snapshots and seed overrides.

#include <stdexcept>
#include <string>
#include <string_view>

#include "bcfl/orchestrator.hpp"

namespace bcfl {

// Malformed or invalid configuration. key() names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& msg)
      : std::invalid_argument("config key '" + key + "': " + msg), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Keys absent from the text keep their defaults. A "preset" key ("paper" or
// "desk") selects the starting point before the other keys apply.
ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(const std::string& path);

// Complete, pretty-printed JSON; parse_config(config_to_json(c)) == c.
std::string config_to_json(const ScenarioConfig& cfg);

// "data=7", "init=3", "train=...", "chain=...", "split=...".
void apply_seed_override(ScenarioConfig& cfg, std::string_view assignment);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

}  // namespace bcfl
