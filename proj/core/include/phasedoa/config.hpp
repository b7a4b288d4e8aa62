#pragma once

// Flat "key = value" configuration shared by simulation, estimation and
// sweeps. Lines starting with '#' are comments. Unknown keys are rejected.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "phasedoa/experiment.hpp"

namespace phasedoa {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every recognised key with its default.
std::span<const ConfigKey> config_keys();

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Throws ConfigError for an unknown key.
  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Defaults overlaid with the given values. Errors name the offending key.
SweepConfig resolve_config(const KeyValueConfig& values);

/// "logspace:lo:hi:count" or a comma-separated list.
std::vector<double> parse_noise_grid(std::string_view text);

}  // namespace phasedoa
