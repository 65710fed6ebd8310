#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beamlab/metric.hpp"
#include "beamlab/wave_solver.hpp"

namespace beamlab {

std::uint64_t fnv1a64(std::string_view data);
// 16 hex digits of FNV-1a over the compact dump (keys sorted by nlohmann::json)
std::string content_fingerprint(const nlohmann::json& j);

// Plot-ready table; the first line of the file is "# beamlab-csv <schema> v<version>".
struct CsvTable {
  std::string schema;
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::string str() const;
  void write(const std::string& path) const;
  static CsvTable read(const std::string& path);
};

void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

nlohmann::json metric_to_json(const WarpedMetric& g);
WarpedMetric metric_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const SpacetimeGrid& grid);
nlohmann::json bump_to_json(const CompactBump& b);
CompactBump bump_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const NonlinearityProfile& H);
NonlinearityProfile profile_from_json(const nlohmann::json& j);

}  // namespace beamlab
