#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfc/control.hpp"
#include "pfc/harness.hpp"

namespace pfc {

/// One row per cell: cell center coordinates, then the value. Two comment
/// lines carry the config digest and the field name/level.
void write_snapshot(const std::filesystem::path& path, const std::string& digest,
                    const Grid& grid, const std::string& name, int level, double time,
                    const Field& values);

/// Long-format space-time table: level, time, coordinates, value.
/// Column k of `values` is written as level `first_level + k`.
void write_space_time(const std::filesystem::path& path, const std::string& digest,
                      const Grid& grid, const TimeGrid& time, const std::string& name,
                      int first_level, const SpaceTimeField& values);

/// Named-column CSV.
void write_series(const std::filesystem::path& path, const std::string& digest,
                  const std::vector<std::string>& columns,
                  const std::vector<std::vector<double>>& rows);

/// Pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Runtime is deliberately left out so data files stay byte-identical.
nlohmann::json to_json(const ProbeReport& report);
nlohmann::json to_json(const BangBangReport& report);

/// Shortest round-trip decimal form of `v`.
std::string format_double(double v);

}  // namespace pfc
