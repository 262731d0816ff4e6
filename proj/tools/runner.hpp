#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace solvrigid::cli {

/// Config problem with a JSON pointer to the offending field.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer(pointer) {}
  std::string pointer;
};

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
};

struct Report {
  std::string subcommand;
  std::uint64_t seed = 0;
  nlohmann::json config;   // effective config after defaults
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> artifacts;  // file name, contents

  void check(const std::string& name, bool pass, double value, double limit);
  bool pass() const;
  nlohmann::json to_json() const;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand (not "all"). `config` may be null for defaults.
Report run(const std::string& sub, const nlohmann::json& config, std::uint64_t seed);

/// Serialized report text (what gets written to disk).
std::string render(const Report& r);
std::uint64_t fnv1a64(const std::string& s);
std::string fnv1a64_hex(const std::string& s);  // 16 lowercase hex digits
std::string report_name(const Report& r, const std::string& text);

}  // namespace solvrigid::cli
