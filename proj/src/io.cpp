#include "pfc/io.hpp"

#include <charconv>
#include <fstream>

namespace pfc {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_coordinates(std::ostream& out, const Grid& grid, Eigen::Index cell) {
  const Eigen::Vector2d x = grid.center(cell);
  out << format_double(x(0));
  if (grid.dim() == 2) out << ',' << format_double(x(1));
}

const char* coordinate_header(const Grid& grid) { return grid.dim() == 2 ? "x,y" : "x"; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_snapshot(const std::filesystem::path& path, const std::string& digest,
                    const Grid& grid, const std::string& name, int level, double time,
                    const Field& values) {
  auto out = open_out(path);
  out << "# config_digest=" << digest << "\n";
  out << "# field=" << name << " level=" << level << " time=" << format_double(time) << "\n";
  out << coordinate_header(grid) << ",value\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    write_coordinates(out, grid, i);
    out << ',' << format_double(values(i)) << '\n';
  }
}

void write_space_time(const std::filesystem::path& path, const std::string& digest,
                      const Grid& grid, const TimeGrid& time, const std::string& name,
                      int first_level, const SpaceTimeField& values) {
  auto out = open_out(path);
  out << "# config_digest=" << digest << "\n";
  out << "# field=" << name << "\n";
  out << "level,time," << coordinate_header(grid) << ",value\n";
  for (Eigen::Index k = 0; k < values.cols(); ++k) {
    const int level = first_level + static_cast<int>(k);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      out << level << ',' << format_double(time.time(level)) << ',';
      write_coordinates(out, grid, i);
      out << ',' << format_double(values(i, k)) << '\n';
    }
  }
}

void write_series(const std::filesystem::path& path, const std::string& digest,
                  const std::vector<std::string>& columns,
                  const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  out << "# config_digest=" << digest << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

nlohmann::json to_json(const ProbeReport& report) {
  nlohmann::json j;
  j["probe"] = report.name;
  j["config_digest"] = report.config_digest;
  j["applicable"] = report.applicable;
  j["passed"] = report.passed;
  j["measured"] = report.measured;
  j["thresholds"] = report.thresholds;
  j["notes"] = report.notes;
  return j;
}

nlohmann::json to_json(const BangBangReport& r) {
  return {{"tolerance", r.tolerance},
          {"positive_fraction", r.positive_fraction},
          {"negative_fraction", r.negative_fraction},
          {"indeterminate_fraction", r.indeterminate_fraction},
          {"lower_consistency", r.lower_consistency},
          {"upper_consistency", r.upper_consistency}};
}

}  // namespace pfc
