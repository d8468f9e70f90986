#pragma once

#include <string>

#include "nnsos/problem.hpp"

namespace nnsos {

// A problem definition file plus its resolved, ready-to-certify ProblemSpec.
// Also carries the input hashes that get stamped into certificates.
struct SystemDefinition {
  std::string name;
  std::string definition_path;
  std::string network_path;
  std::string definition_sha256;
  std::string network_sha256;
  ProblemSpec spec;
};

// Loads and validates a TOML definition. Dynamics and custom region
// polynomials must only reference declared variables; typos surface as parse
// diagnostics with the offending name.
SystemDefinition load_system_definition(const std::string& path);

}  // namespace nnsos
