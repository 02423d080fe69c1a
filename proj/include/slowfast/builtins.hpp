#pragma once

// Catalog of shipped model systems, parameterized by JSON tables.

#include "slowfast/model_core.hpp"
#include "slowfast/normal_form.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace slowfast {

enum class SystemKind { Torus, Birkhoff };
std::string to_string(SystemKind k);

struct BuiltinInfo {
  std::string name;
  SystemKind kind = SystemKind::Birkhoff;
  std::string description;
  nlohmann::json defaults;
  bool needs_profile = false;
};

const std::vector<BuiltinInfo>& builtin_catalog();
const BuiltinInfo& builtin_info(const std::string& name);  // PreconditionError if unknown

struct BuiltSystem {
  std::string name;
  SystemKind kind = SystemKind::Birkhoff;
  std::optional<TorusSystem> torus;
  std::optional<BirkhoffSystem> birkhoff;
  nlohmann::json params;  // defaults merged with the given values
  std::shared_ptr<const ActionProfile> profile;

  int action_dim() const;  // d for torus systems, n for Birkhoff systems
};

// Defaults merged with `params`; unknown keys or wrong types throw
// PreconditionError. duffing-chain needs either a prebuilt `profile` or the
// `profile` parameter naming a profile JSON file.
BuiltSystem make_builtin(const std::string& name, const nlohmann::json& params = {},
                         std::shared_ptr<const ActionProfile> profile = nullptr);

// Reads an ActionProfile written by the normal-form-build experiment.
std::shared_ptr<const ActionProfile> load_action_profile(const std::string& path);

}  // namespace slowfast
