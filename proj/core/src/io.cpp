#include "beamlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "beamlab/error.hpp"

namespace beamlab {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string content_fingerprint(const nlohmann::json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw DomainError("csv row has " + std::to_string(row.size()) + " values, expected " + std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  os << "# beamlab-csv " << schema << " v" << version << '\n';
  for (size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    for (size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << '\n';
  }
  return os.str();
}

void CsvTable::write(const std::string& path) const { write_text(path, str()); }

CsvTable CsvTable::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  CsvTable t;
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string hash, tag, ver;
  hs >> hash >> tag >> t.schema >> ver;
  if (hash != "#" || tag != "beamlab-csv" || ver.size() < 2 || ver[0] != 'v')
    throw DomainError(path + ": missing beamlab-csv header line");
  t.version = std::stoi(ver.substr(1));
  std::getline(in, line);
  std::istringstream cs(line);
  for (std::string col; std::getline(cs, col, ',');) t.columns.push_back(col);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream rs(line);
    std::vector<double> row;
    for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::stod(cell));
    t.add_row(std::move(row));
  }
  return t;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json metric_to_json(const WarpedMetric& g) {
  nlohmann::json j{{"preset", metric_preset_name(g.preset())}, {"dim", g.dim()}};
  if (g.preset() != MetricPreset::minkowski)
    j["bump"] = {{"center", g.bump().center}, {"width", g.bump().width}, {"amplitude", g.bump().amplitude}};
  return j;
}

WarpedMetric metric_from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  const auto p = metric_preset_from_name(j.at("preset").get<std::string>());
  if (p == MetricPreset::minkowski) return WarpedMetric::minkowski(dim);
  Bump b;
  const auto& jb = j.at("bump");
  b.center = jb.at("center").get<std::vector<double>>();
  b.width = jb.at("width").get<double>();
  b.amplitude = jb.at("amplitude").get<double>();
  return p == MetricPreset::lapse_bump ? WarpedMetric::lapse_bump(dim, b) : WarpedMetric::conformal_bump(dim, b);
}

nlohmann::json grid_to_json(const SpacetimeGrid& grid) {
  return {{"dim", grid.dim()}, {"cells", grid.cells()}, {"steps", grid.steps()}, {"horizon", grid.horizon()}};
}

nlohmann::json bump_to_json(const CompactBump& b) {
  return {{"center", b.center}, {"radius", b.radius}, {"amplitude", b.amplitude}};
}

CompactBump bump_from_json(const nlohmann::json& j) {
  CompactBump b;
  b.center = j.at("center").get<std::vector<double>>();
  b.radius = j.value("radius", b.radius);
  b.amplitude = j.value("amplitude", b.amplitude);
  if (!(b.radius > 0)) throw ConfigError("bump radius must be positive");
  return b;
}

nlohmann::json profile_to_json(const NonlinearityProfile& H) {
  nlohmann::json j = nlohmann::json::object();
  for (int k = 2; k <= H.max_order(); ++k) {
    if (H.h[k].empty()) continue;
    auto& arr = j["h" + std::to_string(k)] = nlohmann::json::array();
    for (const auto& b : H.h[k]) arr.push_back(bump_to_json(b));
  }
  return j;
}

NonlinearityProfile profile_from_json(const nlohmann::json& j) {
  NonlinearityProfile H;
  if (j.is_null()) return H;
  if (!j.is_object()) throw ConfigError("nonlinearity must be an object of h<k> bump lists");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    int k = -1;
    if (key.size() >= 2 && key[0] == 'h') {
      try {
        k = std::stoi(key.substr(1));
      } catch (const std::exception&) {
      }
    }
    if (k < 2 || k > 8) throw ConfigError("nonlinearity key '" + key + "' is not one of h2 .. h8");
    std::vector<CompactBump> bumps;
    for (const auto& b : it.value()) bumps.push_back(bump_from_json(b));
    H.set(k, std::move(bumps));
  }
  return H;
}

}  // namespace beamlab
