#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parkdyn/demand.hpp"

namespace parkdyn {

/// Parking-related state. `Entry` and `Exited` bracket a vehicle's life.
enum class Family : std::uint8_t {
  Entry,
  MovingOn,    // i
  MovingOff,   // ii
  Transit,     // iii: pass-through or re-departed
  Cruising,    // iv
  ParkedOn,    // v
  ParkedOff,   // vi
  Exited,
};

std::string_view family_name(Family f);
Family family_from_name(std::string_view name);

/// The only arcs a vehicle may follow:
/// entry->{i,ii,iii}, i->{iv,v}, ii->{iv,vi}, iv->v, v->iii, vi->iii, iii->exited.
bool transition_allowed(Family from, Family to);

struct ParkingEvent {
  int vehicle_id = 0;
  double t_s = 0.0;
  Family from = Family::Entry;
  Family to = Family::Entry;
  int link_id = -1;  // -1 when the event happens at the lot
  int lot_id = -1;
  double dist_km = 0.0;  // on-street distance accumulated in `from`
  double occ_on = 0.0;   // network on-street occupancy at the event
  double occ_off = 0.0;  // lot occupancy at the event

  bool operator==(const ParkingEvent&) const = default;
};

/// Per-vehicle summary. Family indices into the arrays are i=0 .. iv=3.
struct VehicleRecord {
  int vehicle_id = 0;
  bool is_parker = false;
  TripPurpose purpose = TripPurpose::Pass;
  double entry_time_s = 0.0;
  std::optional<double> exit_time_s;
  std::array<double, 4> dist_km{};  // on-street distance per moving family
  std::array<double, 4> time_hr{};  // on-street time per moving family
  double circuit_km = 0.0;          // lot circuits driven while in family iv
  double circuit_hr = 0.0;
  double total_dist_km = 0.0;       // on-street, accumulated independently
  double free_flow_hr = 0.0;        // same path at min(v_f, desired speed)
  bool parked = false;              // ever parked (on or off)
  std::optional<double> cruise_start_occ;  // occ_on when family iv began
  Family final_family = Family::Entry;

  bool operator==(const VehicleRecord&) const = default;
};

/// Append-only transition log plus the per-vehicle summaries.
struct ParkingEventLog {
  std::vector<ParkingEvent> events;
  std::vector<VehicleRecord> vehicles;
  double horizon_s = 0.0;

  bool operator==(const ParkingEventLog&) const = default;
};

/// events.csv: vehicle_id,t_s,from_family,to_family,link_id,dist_km,occ_on,occ_off
/// Lot events carry "lot<id>" in the link_id column.
void write_events_csv(const ParkingEventLog& log, const std::filesystem::path& path);
std::vector<ParkingEvent> read_events_csv(const std::filesystem::path& path);

}  // namespace parkdyn
