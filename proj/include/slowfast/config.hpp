#pragma once

// Scenario configuration: TOML text -> JSON tree -> validated ScenarioConfig.

#include "slowfast/measures.hpp"
#include "slowfast/sde.hpp"
#include "slowfast/torus_averaging.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slowfast {

// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// TOML document as JSON (tables -> objects, arrays -> arrays). Integers stay
// integers. Throws ConfigError with line/column on parse errors.
nlohmann::json parse_toml(const std::string& text, const std::string& origin = "<string>");
nlohmann::json load_toml_file(const std::string& path);

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"averaging-convergence", "stationary-mixing", "uniform-in-time",
                                                 "exit-time",             "lifting-diagnostic", "resonance-scan",
                                                 "normal-form-build"};
  return kinds;
}

struct QuadratureSpec {
  std::string kind = "default";  // default | tensor-trapezoid | rank1-lattice
  int points_per_dim = 64;
  int lattice_size = 4096;

  TorusQuadrature build(int n) const;
  nlohmann::json to_json() const;
};

struct DistanceSpec {
  std::size_t slices = kDefaultSlices;
  std::size_t bootstrap = 20;
  std::size_t support_cap = kDefaultSupportCap;
  SliceReduction reduction = SliceReduction::Mean;

  DistanceOptions options(std::uint64_t seed, std::size_t parallelism) const;
  nlohmann::json to_json() const;
};

struct ScenarioConfig {
  std::string experiment;
  std::string system;            // builtin name (unused by normal-form-build)
  nlohmann::json system_params;  // as given
  std::vector<double> eps_grid;
  double horizon = 1.0;
  double step = 1e-3;
  double record_every = 0.0;  // slow-time spacing of recorded states; 0 = horizon only
  std::size_t n_paths = 1000;
  std::size_t dump_paths = 0;  // leading paths per eps written as SFAV1 files
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::RotationSplitEM;
  BoundaryPolicy boundary = BoundaryPolicy::ClampAtZero;
  std::vector<double> init_actions;  // torus systems
  std::vector<double> init_angles;   // torus systems
  std::vector<double> init_state;    // Birkhoff systems
  QuadratureSpec quadrature;
  DistanceSpec distance;
  std::string output_dir = "slowfast-out";
  std::optional<std::size_t> threads;
  nlohmann::json section;  // experiment-specific table, e.g. [exit]
  nlohmann::json source;   // the parsed document, echoed in reports

  std::size_t record_stride() const;
};

// Validates structure, types and ranges. Unknown keys are errors.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);

// Name of the experiment-specific table for an experiment kind.
std::string experiment_section(const std::string& experiment);

}  // namespace slowfast
