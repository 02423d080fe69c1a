#pragma once

// Scenario runner: wires a validated config through the library and writes
// report.json, distances.csv, series/*.csv and timing.json.

#include "slowfast/builtins.hpp"
#include "slowfast/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace slowfast {

inline constexpr const char* kVersion = "1.0.0";

// NaN or another numerical breakdown while running a scenario.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PreparedScenario {
  ScenarioConfig config;
  std::optional<BuiltSystem> system;  // absent for normal-form-build
};

// Builds the system and checks experiment-specific constraints; throws
// ConfigError with an actionable message.
PreparedScenario prepare_scenario(const ScenarioConfig& config);

struct RunOptions {
  std::optional<std::string> output_dir;  // overrides the config
  std::optional<std::size_t> threads;     // overrides config and SLOWFAST_THREADS
  std::ostream* log = nullptr;            // progress lines
};

// Runs the experiment and writes all output files. Returns the report.
// Throws NumericalError / IntegrationError / EnsembleError / DomainError on
// numerical failure.
nlohmann::json run_scenario(const PreparedScenario& scenario, const RunOptions& options = {});

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
// Hash of the code version and the canonical (key-sorted) config document.
std::string config_hash(const nlohmann::json& doc);

// Exit codes of the command line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Loads, validates and runs a config file, printing errors to `err`.
int run_config_file(const std::string& path, const RunOptions& options, std::ostream& err);
// Loads and validates only.
int validate_config_file(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace slowfast
