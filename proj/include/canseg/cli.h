#ifndef CANSEG_CLI_H_
#define CANSEG_CLI_H_

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace canseg {

std::string version();

// Provenance record written to `<primary output>.manifest.json`.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::json config;  // resolved TrainConfig, or null
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  uint64_t seed = 0;
  std::string started;  // ISO 8601, UTC
  double seconds = 0;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::filesystem::path manifest_path(const std::filesystem::path& output);

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace canseg

#endif  // CANSEG_CLI_H_
