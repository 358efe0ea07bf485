#pragma once

// Command-line front end. `run_cli` is the whole program minus `main`, so the
// subcommands can be driven from tests with captured streams.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace sidehole {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_solver = 2, exit_assertion = 3 };

struct RunManifest {
  std::string subcommand;
  nlohmann::json config;  ///< resolved configuration
  nlohmann::json solver;  ///< solver parameters
  std::vector<std::string> outputs;
  bool cache_hit = false;
  std::string version = kVersion;

  /// FNV-1a over subcommand, config, solver parameters and version. Output
  /// paths and cache flags are excluded so reruns hash identically.
  std::string hash() const;
};

void to_json(nlohmann::json& j, const RunManifest& m);

/// $SIDEHOLE_CACHE, else $XDG_CACHE_HOME/sidehole/alpha.json, else
/// $HOME/.cache/sidehole/alpha.json, else ./.sidehole-cache/alpha.json.
std::filesystem::path alpha_cache_path();

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Fingering characters o/x/h to open fractions 1/0/0.5; throws
/// std::invalid_argument on any other character.
std::vector<double> parse_fingering(const std::string& fingering);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sidehole
