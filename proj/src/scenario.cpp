#include "parkdyn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json_fields.hpp"
#include "parkdyn/error.hpp"
#include "parkdyn/network_io.hpp"

namespace parkdyn {

using detail::field;
using detail::field_or;
using nlohmann::json;

namespace {

double total_weight(const std::vector<double>& w) {
  if (w.empty()) throw std::invalid_argument("demand profile has no weights");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw std::invalid_argument("demand weights must be non-negative");
    s += x;
  }
  if (!(s > 0.0)) throw std::invalid_argument("demand weights sum to zero");
  return s;
}

}  // namespace

double DemandProfile::share(double t0, double t1, double horizon) const {
  const double total = total_weight(weights);
  const double slot = horizon / weights.size();
  t0 = std::clamp(t0, 0.0, horizon);
  t1 = std::clamp(t1, 0.0, horizon);
  if (t1 <= t0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double a = std::max(t0, i * slot);
    const double b = std::min(t1, (i + 1) * slot);
    if (b > a) s += weights[i] * (b - a) / slot;
  }
  return s / total;
}

double DemandProfile::arrival_time(double u, double horizon) const {
  const double total = total_weight(weights);
  const double slot = horizon / weights.size();
  double target = std::clamp(u, 0.0, 1.0) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (target < weights[i] || i + 1 == weights.size())
      return std::min(horizon, slot * (i + (weights[i] > 0 ? target / weights[i] : 0.0)));
    target -= weights[i];
  }
  return horizon;
}

Network make_network(const ScenarioConfig& cfg) {
  Network base;
  if (cfg.network_file) {
    base = load_network(*cfg.network_file);
  } else {
    const GridSpec& g = cfg.grid;
    base = build_grid(g.rows, g.cols, g.link_length_km, g.free_flow_speed, g.jam_density,
                      g.parking_capacity_per_link, g.spot_spacing_km);
  }
  std::vector<Link> links(base.links().begin(), base.links().end());
  if (!cfg.network_file && cfg.grid.upper_region_capacity) {
    const int cap = *cfg.grid.upper_region_capacity;
    for (std::size_t i = 0; i < links.size(); ++i) {
      if (base.region(i) != 1) continue;
      links[i].parking_capacity = cap;
      links[i].spot_spacing_km = cap > 0 ? links[i].length_km / cap : 0.0;
    }
  }
  std::vector<OffStreetLot> lots(base.lots().begin(), base.lots().end());
  if (cfg.lot.capacity > 0 && lots.empty()) {
    int entry = cfg.lot.entry_link;
    if (entry < 0) {
      // Link of region 1 whose head is closest to that region's centroid.
      double cx = 0, cy = 0;
      int count = 0;
      for (std::size_t i = 0; i < links.size(); ++i)
        if (base.region(i) == 1) {
          const auto& n = base.node(base.to_index(i));
          cx += n.x;
          cy += n.y;
          ++count;
        }
      if (count == 0) throw std::invalid_argument("no region-1 link to attach the lot to");
      cx /= count;
      cy /= count;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < links.size(); ++i) {
        if (base.region(i) != 1) continue;
        const auto& n = base.node(base.to_index(i));
        const double d = std::hypot(n.x - cx, n.y - cy);
        if (d < best - 1e-9) {
          best = d;
          entry = links[i].id;
        }
      }
    }
    lots.push_back({0, entry, cfg.lot.capacity, cfg.lot.circuit_length_km, cfg.lot.cruise_speed});
  }
  std::vector<Node> nodes(base.nodes().begin(), base.nodes().end());
  std::vector<int> regions(base.regions().begin(), base.regions().end());
  return Network(std::move(nodes), std::move(links), std::move(lots), std::move(regions));
}

namespace {

json profile_to_json(const DemandProfile& p) { return {{"count", p.count}, {"weights", p.weights}}; }

DemandProfile profile_from_json(const json& j, const std::string& path) {
  DemandProfile p;
  p.count = field<int>(j, "count", path);
  p.weights = field_or<std::vector<double>>(j, "weights", {1.0}, path);
  if (p.count < 0) throw ParseError(path + ".count: must be >= 0");
  try {
    total_weight(p.weights);
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ".weights: " + e.what());
  }
  return p;
}

json duration_to_json(const DurationDistribution& d) {
  if (d.is_uniform()) return {{"kind", "uniform"}, {"lo_hr", d.lo()}, {"hi_hr", d.hi()}};
  json pts = json::array();
  for (auto [x, f] : d.points()) pts.push_back({x, f});
  return {{"kind", "table"}, {"points", pts}};
}

DurationDistribution duration_from_json(const json& j, const std::string& path) {
  const auto kind = field<std::string>(j, "kind", path);
  try {
    if (kind == "uniform")
      return DurationDistribution::uniform(field<double>(j, "lo_hr", path),
                                           field<double>(j, "hi_hr", path));
    if (kind == "table")
      return DurationDistribution::table(
          field<std::vector<std::pair<double, double>>>(j, "points", path));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }
  throw ParseError(path + ".kind: unknown duration kind '" + kind + "'");
}

}  // namespace

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  if (c.network_file) j["network_file"] = *c.network_file;
  j["grid"] = {{"rows", c.grid.rows},
               {"cols", c.grid.cols},
               {"link_length_km", c.grid.link_length_km},
               {"free_flow_speed", c.grid.free_flow_speed},
               {"jam_density", c.grid.jam_density},
               {"parking_capacity_per_link", c.grid.parking_capacity_per_link},
               {"spot_spacing_km", c.grid.spot_spacing_km}};
  if (c.grid.upper_region_capacity) j["grid"]["upper_region_capacity"] = *c.grid.upper_region_capacity;
  j["lot"] = {{"capacity", c.lot.capacity},
              {"circuit_length_km", c.lot.circuit_length_km},
              {"cruise_speed", c.lot.cruise_speed},
              {"entry_link", c.lot.entry_link}};
  j["demand"] = {{"parkers", profile_to_json(c.parkers)}, {"passers", profile_to_json(c.passers)}};
  j["prices"] = {{"on", c.fee_on}, {"off", c.fee_off}};
  j["choice"] = {{"alpha_on", c.alpha_on}, {"alpha_off", c.alpha_off}, {"beta", c.beta}};
  j["duration"] = duration_to_json(c.duration);
  j["speeds"] = {{"desired", c.desired_speed},
                 {"desired_jitter", c.desired_speed_jitter},
                 {"cruise", c.cruise_speed},
                 {"cruise_jitter", c.cruise_speed_jitter}};
  j["background"] = {{"captive", c.captive_spots},
                     {"preoccupied", c.preoccupied_spots},
                     {"vacate_rate_per_min", c.vacate_rate_per_min}};
  j["guidance"] = {{"local", c.guidance.local_guidance},
                   {"regional", c.guidance.regional_guidance},
                   {"regional_threshold", c.guidance.regional_threshold},
                   {"compliance", c.guidance.compliance}};
  j["seed"] = c.seed;
  j["dt_s"] = c.dt_s;
  j["horizon_hr"] = c.horizon_hr;
  j["gridlock_steps"] = c.gridlock_steps;
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  const std::string s = "scenario";
  if (!j.is_object()) throw ParseError(s + ": expected an object");
  if (j.contains("network_file")) c.network_file = field<std::string>(j, "network_file", s);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    const std::string p = s + ".grid";
    c.grid.rows = field_or(g, "rows", c.grid.rows, p);
    c.grid.cols = field_or(g, "cols", c.grid.cols, p);
    c.grid.link_length_km = field_or(g, "link_length_km", c.grid.link_length_km, p);
    c.grid.free_flow_speed = field_or(g, "free_flow_speed", c.grid.free_flow_speed, p);
    c.grid.jam_density = field_or(g, "jam_density", c.grid.jam_density, p);
    c.grid.parking_capacity_per_link =
        field_or(g, "parking_capacity_per_link", c.grid.parking_capacity_per_link, p);
    c.grid.spot_spacing_km = field_or(g, "spot_spacing_km", c.grid.spot_spacing_km, p);
    if (g.contains("upper_region_capacity"))
      c.grid.upper_region_capacity = field<int>(g, "upper_region_capacity", p);
  }
  if (j.contains("lot")) {
    const auto& l = j["lot"];
    const std::string p = s + ".lot";
    c.lot.capacity = field_or(l, "capacity", c.lot.capacity, p);
    c.lot.circuit_length_km = field_or(l, "circuit_length_km", c.lot.circuit_length_km, p);
    c.lot.cruise_speed = field_or(l, "cruise_speed", c.lot.cruise_speed, p);
    c.lot.entry_link = field_or(l, "entry_link", c.lot.entry_link, p);
  }
  if (j.contains("demand")) {
    const auto& d = j["demand"];
    if (d.contains("parkers")) c.parkers = profile_from_json(d["parkers"], s + ".demand.parkers");
    if (d.contains("passers")) c.passers = profile_from_json(d["passers"], s + ".demand.passers");
  }
  if (j.contains("prices")) {
    c.fee_on = field_or(j["prices"], "on", c.fee_on, s + ".prices");
    c.fee_off = field_or(j["prices"], "off", c.fee_off, s + ".prices");
  }
  if (j.contains("choice")) {
    const auto& ch = j["choice"];
    const std::string p = s + ".choice";
    c.alpha_on = field_or(ch, "alpha_on", c.alpha_on, p);
    c.alpha_off = field_or(ch, "alpha_off", c.alpha_off, p);
    c.beta = field_or(ch, "beta", c.beta, p);
    if (c.beta < 0) throw ParseError(p + ".beta: must be >= 0");
  }
  if (j.contains("duration")) c.duration = duration_from_json(j["duration"], s + ".duration");
  if (j.contains("speeds")) {
    const auto& v = j["speeds"];
    const std::string p = s + ".speeds";
    c.desired_speed = field_or(v, "desired", c.desired_speed, p);
    c.desired_speed_jitter = field_or(v, "desired_jitter", c.desired_speed_jitter, p);
    c.cruise_speed = field_or(v, "cruise", c.cruise_speed, p);
    c.cruise_speed_jitter = field_or(v, "cruise_jitter", c.cruise_speed_jitter, p);
  }
  if (j.contains("background")) {
    const auto& b = j["background"];
    const std::string p = s + ".background";
    c.captive_spots = field_or(b, "captive", c.captive_spots, p);
    c.preoccupied_spots = field_or(b, "preoccupied", c.preoccupied_spots, p);
    c.vacate_rate_per_min = field_or(b, "vacate_rate_per_min", c.vacate_rate_per_min, p);
  }
  if (j.contains("guidance")) {
    const auto& g = j["guidance"];
    const std::string p = s + ".guidance";
    c.guidance.local_guidance = field_or(g, "local", false, p);
    c.guidance.regional_guidance = field_or(g, "regional", false, p);
    c.guidance.regional_threshold = field_or(g, "regional_threshold", 0.95, p);
    c.guidance.compliance = field_or(g, "compliance", 1.0, p);
    if (c.guidance.compliance < 0 || c.guidance.compliance > 1)
      throw ParseError(p + ".compliance: must lie in [0, 1]");
  }
  c.seed = field_or<std::uint64_t>(j, "seed", c.seed, s);
  c.dt_s = field_or(j, "dt_s", c.dt_s, s);
  c.horizon_hr = field_or(j, "horizon_hr", c.horizon_hr, s);
  c.gridlock_steps = field_or(j, "gridlock_steps", c.gridlock_steps, s);
  if (!(c.dt_s > 0)) throw ParseError(s + ".dt_s: must be > 0");
  if (!(c.horizon_hr > 0)) throw ParseError(s + ".horizon_hr: must be > 0");
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  ScenarioConfig c;
  try {
    c = scenario_from_json(detail::parse_file(path.string()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (c.network_file) {
    std::filesystem::path p(*c.network_file);
    if (p.is_relative()) c.network_file = (path.parent_path() / p).lexically_normal().string();
  }
  return c;
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << scenario_to_json(cfg).dump(2) << '\n';
}

}  // namespace parkdyn
