#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "parkdyn/choice.hpp"
#include "parkdyn/demand.hpp"
#include "parkdyn/event_log.hpp"
#include "parkdyn/network.hpp"
#include "parkdyn/scenario.hpp"

namespace parkdyn {

struct LinkOccupancy {
  int capacity = 0;
  int occupied = 0;
  int free() const { return capacity - occupied; }
  double ratio() const { return capacity > 0 ? double(occupied) / capacity : 1.0; }
};

/// Next link for a vehicle searching at `node` having arrived on `incoming`.
/// Without local guidance the choice is uniform over downstream links with
/// parking supply (the reverse link only where U-turns are allowed); with
/// local guidance it is the free link of least occupancy, ties uniform.
/// Falls back to a uniform downstream link when nothing qualifies. Links of
/// `avoid_region` are dropped from the candidates if anything else remains.
/// Throws TopologyError at a dead end.
std::size_t local_search_step(const Network& net, std::size_t node,
                              std::optional<std::size_t> incoming,
                              std::span<const LinkOccupancy> occupancy,
                              const GuidanceConfig& guidance, Rng& rng,
                              int avoid_region = -1);

/// Greenshields speed of the link's loading; on a single-lane link nobody
/// passes the slowest cruiser present.
double effective_link_speed(const Link& link, int vehicles, std::optional<double> slowest_cruiser);

enum class RegionalDecision { Proceed, Divert };

/// Divert when the region being entered is above threshold and the driver
/// complies (`compliance_u` < compliance).
RegionalDecision apply_regional_guidance(double regional_occupancy,
                                         const GuidanceConfig& guidance, double compliance_u);
RegionalDecision apply_regional_guidance(double regional_occupancy,
                                         const GuidanceConfig& guidance, Rng& rng);

/// Network-wide sums over one simulation step.
struct StepSample {
  double t_s = 0.0;   // step start
  double dt_s = 0.0;
  double distance_km = 0.0;      // on-street vehicle-km
  double time_hr = 0.0;          // on-street vehicle-hours
  double cruise_time_hr = 0.0;   // on-street time in family iv
  double circuit_time_hr = 0.0;  // lot circuits
  // state at step end
  int moving_on = 0, moving_off = 0, transit = 0, cruising = 0;
  int in_circuit = 0;
  int parked_on = 0;   // on-street spots occupied, background included
  int parked_off = 0;
  int exited = 0;
  int injected = 0;
  int active() const { return moving_on + moving_off + transit + cruising; }
};

struct RunSummary {
  bool gridlock = false;
  std::optional<double> gridlock_time_s;
  int injected = 0;
  int exited = 0;
  bool conservation_ok = true;
};

struct RunResult {
  ParkingEventLog log;
  std::vector<StepSample> trace;
  RunSummary summary;
  double network_length_km = 0.0;
  int on_street_capacity = 0;
  int lot_capacity = 0;
};

/// Cohort information a controller needs to initialise a prediction.
struct PlantSnapshot {
  double t_s = 0.0;
  int moving_on = 0, moving_off = 0, transit = 0, cruising = 0;
  int parked_on = 0, parked_off = 0;
  int background_on = 0;               // captive + not-yet-vacated spots
  std::vector<double> on_park_times_s;   // still-parked on-street vehicles
  std::vector<double> off_park_times_s;  // still-parked lot vehicles
  std::vector<double> circuit_release_s; // when in-circuit vehicles reappear
};

/// Mesoscopic cruising-for-parking simulator. Sequential and deterministic
/// given the scenario seed.
class Simulator {
 public:
  Simulator(Network net, ScenarioConfig cfg);

  void set_prices(double fee_on, double fee_off);
  double fee_on() const { return fee_on_; }
  double fee_off() const { return fee_off_; }

  void step();
  void run_until(double t_s);
  void run() { run_until(cfg_.horizon_hr * 3600.0); }

  double time_s() const { return t_s_; }
  const Network& network() const { return net_; }
  const ScenarioConfig& config() const { return cfg_; }
  std::span<const TripChain> trips() const { return trips_; }
  std::span<const LinkOccupancy> occupancy() const { return occ_; }
  int lot_occupied() const { return lot_occupied_; }
  const ParkingEventLog& log() const { return log_; }
  std::span<const StepSample> trace() const { return trace_; }
  const RunSummary& summary() const { return summary_; }

  double on_street_occupancy() const;
  double regional_occupancy(int region) const;

  PlantSnapshot snapshot() const;
  /// Vehicle conservation: injected == on links + parked + in circuit + exited.
  bool conserved() const;

  RunResult result() const;

 private:
  enum class Where : std::uint8_t { Pending, OnLink, InCircuit, ParkedOn, ParkedOff, Exited };

  struct Vehicle {
    std::size_t trip = 0;
    Family family = Family::Entry;
    Where where = Where::Pending;
    std::size_t link = 0;
    double pos_km = 0.0;
    std::size_t spot = 0;
    std::optional<std::size_t> target;  // family i target link
    std::vector<std::size_t> route;     // links still to take after `link`
    std::size_t route_pos = 0;
    double park_time_s = 0.0;
    double park_until_s = 0.0;
    double circuit_until_s = 0.0;
    double clock_s = 0.0;  // how far into the current step this vehicle has got
    double last_event_s = 0.0;
    double seg_dist_km = 0.0;
    std::size_t exit_node = 0;
    Rng rng;
  };

  void generate_trips();
  void seed_background();
  void inject(std::size_t vi, double t);
  void depart(std::size_t vi, double t);
  void release_from_circuit(std::size_t vi, double t);
  void move(std::size_t vi, double t_from, double t_to, std::span<const double> link_speed,
            StepSample& acc);
  // Returns false when the vehicle leaves the road (parked, lot, exit).
  bool arrive_at_node(std::size_t vi, double t);
  void enter_link(std::size_t vi, std::size_t link, double t);
  void route_to(std::size_t vi, std::size_t from_node, std::size_t to_node);
  void route_to_link(std::size_t vi, std::size_t from_node, std::size_t link);
  void transition(std::size_t vi, Family to, double t, int link_id, int lot_id);
  void park_on_street(std::size_t vi, std::size_t spot, double t);
  void arrive_at_lot(std::size_t vi, double t);
  void search_from(std::size_t vi, std::size_t node, double t);
  bool divert_at(std::size_t vi, std::size_t next_link) const;
  void set_spot(std::size_t link, std::size_t spot, std::uint8_t state);
  std::optional<std::size_t> free_spot_between(std::size_t link, double p0, double p1) const;
  double spot_position(std::size_t link, std::size_t spot) const;
  std::vector<double> route_jitter(Vehicle& v);
  std::size_t pick_exit_node(Vehicle& v, std::size_t current) const;

  Network net_;
  ScenarioConfig cfg_;
  double fee_on_ = 0.0, fee_off_ = 0.0;
  double t_s_ = 0.0;

  std::vector<TripChain> trips_;
  std::vector<Vehicle> vehicles_;
  std::size_t next_trip_ = 0;

  std::vector<LinkOccupancy> occ_;
  std::vector<std::vector<std::uint8_t>> spot_taken_;  // 0 free, 1 vehicle, 2 background
  std::vector<std::size_t> parking_links_;
  std::vector<int> region_capacity_, region_occupied_;
  int occupied_on_ = 0;
  int background_on_ = 0;
  int lot_occupied_ = 0;
  std::optional<std::size_t> lot_;  // index into net_.lots()
  std::size_t lot_link_ = 0;

  struct Vacate {
    double t_s;
    std::size_t link;
    std::size_t spot;
  };
  std::vector<Vacate> vacate_;
  std::size_t next_vacate_ = 0;

  ParkingEventLog log_;
  std::vector<StepSample> trace_;
  RunSummary summary_;
  int stalled_steps_ = 0;
  int exited_ = 0;
};

/// Runs a scenario to its horizon.
RunResult run_scenario(const Network& net, const ScenarioConfig& cfg);

}  // namespace parkdyn
