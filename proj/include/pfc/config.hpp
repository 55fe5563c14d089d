#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "pfc/control.hpp"

namespace pfc {

struct GradcheckSettings {
  int directions = 5;
  double fd_tolerance = 1e-6;
  double duality_tolerance = 1e-8;
};

struct OutputSettings {
  std::filesystem::path dir = "out";
  // Field snapshots every `snapshot_stride` levels; the final level is
  // always written.
  int snapshot_stride = 8;
};

struct RunConfig {
  ProblemSpec spec;
  SpaceTimeField control;
  // Empty means "seeded random direction".
  SpaceTimeField direction;
  OptimizeOptions optimize;
  GradcheckSettings gradcheck;
  OutputSettings output;
  std::uint64_t seed = 1;

  nlohmann::json effective;  // input merged with defaults
  std::string digest;        // FNV-1a of effective.dump()
};

/// Builds a validated RunConfig from parsed JSON. Throws ValidationError
/// listing every violated rule.
RunConfig config_from_json(const nlohmann::json& doc);

/// Reads `path`, then config_from_json. ParseError on I/O or JSON syntax.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace pfc
