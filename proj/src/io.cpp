#include "mrflp/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace mrflp {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

}  // namespace

std::vector<ObservationSet> ingest_grid_csv(const std::string& path, int nx, int ny) {
  if (nx <= 0 || ny <= 0) throw Error("ingest_grid_csv: grid dimensions must be positive");
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  int lineno = 0;
  bool header = false;
  std::map<int, std::map<Index, double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split_fields(t);
    auto fail = [&](const std::string& what) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + what);
    };
    if (!header) {
      if (f != std::vector<std::string>{"t", "lat_index", "lon_index", "value"})
        fail("expected header t,lat_index,lon_index,value");
      header = true;
      continue;
    }
    if (f.size() != 4) fail("expected 4 fields, got " + std::to_string(f.size()));
    int time = 0, lat = 0, lon = 0;
    double value = 0.0;
    if (!parse_number(f[0], time) || time < 1) fail("bad time '" + f[0] + "'");
    if (!parse_number(f[1], lat) || lat < 0 || lat >= ny) fail("bad lat_index '" + f[1] + "'");
    if (!parse_number(f[2], lon) || lon < 0 || lon >= nx) fail("bad lon_index '" + f[2] + "'");
    if (!parse_number(f[3], value) || !std::isfinite(value)) fail("bad value '" + f[3] + "'");
    const Index site = static_cast<Index>(lat) * nx + lon;
    if (!rows[time].emplace(site, value).second)
      fail("duplicate observation at t=" + std::to_string(time) + ", site " + std::to_string(site));
  }
  if (!header) throw Error(path + ": missing header");
  const int horizon = rows.empty() ? 0 : rows.rbegin()->first;
  std::vector<ObservationSet> data(static_cast<std::size_t>(horizon));
  for (const auto& [time, cells] : rows) {
    ObservationSet& o = data[static_cast<std::size_t>(time - 1)];
    o.values.resize(static_cast<Index>(cells.size()));
    Index k = 0;
    for (const auto& [site, v] : cells) {
      o.sites.push_back(site);
      o.values[k++] = v;
    }
  }
  return data;
}

void write_grid_csv(const std::string& path, const std::vector<ObservationSet>& data, int nx, std::uint64_t seed) {
  if (nx <= 0) throw Error("write_grid_csv: nx must be positive");
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os.precision(17);
  os << provenance_line(seed) << "\n" << "t,lat_index,lon_index,value\n";
  for (std::size_t t = 0; t < data.size(); ++t)
    for (std::size_t i = 0; i < data[t].sites.size(); ++i) {
      const Index s = data[t].sites[i];
      os << t + 1 << "," << s / nx << "," << s % nx << "," << data[t].values[static_cast<Index>(i)] << "\n";
    }
}

HyperParameters fit_real_data_hyperparameters(const GridSpec& grid, const std::vector<ObservationSet>& data,
                                              CovFamily family, const MleOptions& options) {
  HyperParameters h;
  double range = 0.0, signal = 0.0, nugget = 0.0;
  std::string last_error = "no time point has enough observations";
  for (const auto& obs : data) {
    if (static_cast<Index>(obs.sites.size()) < options.min_observations) continue;
    std::vector<Point2> pts;
    for (Index s : obs.sites) {
      if (s < 0 || s >= grid.size()) throw Error("fit_real_data_hyperparameters: site outside the grid");
      pts.push_back(grid.points[static_cast<std::size_t>(s)]);
    }
    const VectorXd y = obs.values.array() - obs.values.mean();
    try {
      const SpatialFit f = fit_spatial_mle(pts, y, family, options);
      range += f.range;
      signal += f.signal_variance;
      nugget += f.nugget_variance;
      ++h.times_used;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (h.times_used == 0) throw ConvergenceError("fit_real_data_hyperparameters: every per-time fit failed: " + last_error);
  const double k = h.times_used;
  h.range = range / k;
  h.sigma_v2 = nugget / k;
  h.sigma_w2 = signal / k / 10.0;
  h.sigma0_2 = 9.0 * h.sigma_w2;
  return h;
}

namespace {

constexpr char kMagic[] = "MRFLPBF1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

json factor_header(const MultiResPartition& p) {
  json regions = json::array();
  for (const auto& r : p.regions())
    regions.push_back({{"path", r.path},
                       {"level", r.level},
                       {"rows", {r.begin, r.end}},
                       {"cols", {r.col_offset, r.col_offset + r.rank}}});
  return {{"n", p.n()},
          {"columns", p.num_columns()},
          {"levels", p.levels()},
          {"regions", regions},
          {"to_ordered", p.to_ordered()}};
}

}  // namespace

void write_factor_binary(const std::string& path, const BlockFactor& b) {
  if (!b.partition()) throw Error("write_factor_binary: factor has no partition");
  const std::string header = factor_header(*b.partition()).dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  const std::uint64_t len = header.size();
  os.write(kMagic, kMagicLen);
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (std::size_t a = 0; a < b.partition()->regions().size(); ++a) {
    const MatrixXd& m = b.block(static_cast<int>(a));
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!os) throw Error("write failed: " + path);
}

BlockFactor read_factor_binary(const std::string& path, PartitionPtr partition) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) throw Error(path + ": not a factor file");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 30)) throw Error(path + ": corrupt header length");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error(path + ": truncated header");
  if (json::parse(header) != factor_header(*partition))
    throw Error(path + ": header does not match the partition");
  BlockFactor b(partition);
  for (std::size_t a = 0; a < partition->regions().size(); ++a) {
    MatrixXd& m = b.block(static_cast<int>(a));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!in) throw Error(path + ": truncated data");
  return b;
}

}  // namespace mrflp
