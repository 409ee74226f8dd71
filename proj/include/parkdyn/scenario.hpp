#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parkdyn/demand.hpp"
#include "parkdyn/network.hpp"

namespace parkdyn {

struct GuidanceConfig {
  bool local_guidance = false;
  bool regional_guidance = false;
  double regional_threshold = 0.95;
  double compliance = 1.0;
};

/// Arrival count spread over the horizon with piecewise-constant relative
/// weights (equal sub-intervals).
struct DemandProfile {
  int count = 0;
  std::vector<double> weights{1.0};

  /// Fraction of the arrivals falling in [t0, t1] (hours, horizon-relative).
  double share(double t0_hr, double t1_hr, double horizon_hr) const;
  /// Inverse CDF of the arrival-time density; u in [0,1) -> hours.
  double arrival_time(double u, double horizon_hr) const;
};

struct GridSpec {
  int rows = 6;
  int cols = 6;
  double link_length_km = 0.2;
  double free_flow_speed = 50.0;
  double jam_density = 100.0;
  int parking_capacity_per_link = 3;
  double spot_spacing_km = 0.0;
  /// When set, links of region 1 get this capacity instead.
  std::optional<int> upper_region_capacity;
};

struct LotSpec {
  int capacity = 0;
  double circuit_length_km = 0.3;
  double cruise_speed = 15.0;
  /// Link id the lot hangs off; negative -> pick an upper-region link.
  int entry_link = -1;
};

struct ScenarioConfig {
  std::optional<std::string> network_file;
  GridSpec grid;
  LotSpec lot;

  DemandProfile parkers{400, {1.0}};
  DemandProfile passers{0, {1.0}};

  double fee_on = 0.0;   // $
  double fee_off = 0.0;  // $
  double alpha_on = 0.0;
  double alpha_off = 0.0;
  double beta = 0.3;  // 1/$

  DurationDistribution duration = DurationDistribution::uniform(0.0, 1.0);

  double desired_speed = 50.0;
  double desired_speed_jitter = 5.0;
  double cruise_speed = 30.0;
  double cruise_speed_jitter = 5.0;

  int captive_spots = 0;
  int preoccupied_spots = 0;
  double vacate_rate_per_min = 6.0;

  GuidanceConfig guidance;

  std::uint64_t seed = 1;
  double dt_s = 1.0;
  double horizon_hr = 1.0;
  int gridlock_steps = 120;
};

/// Network described by the scenario: the referenced file, or the grid with
/// its lot attached.
Network make_network(const ScenarioConfig& cfg);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);

}  // namespace parkdyn
