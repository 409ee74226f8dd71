#pragma once

#include <optional>
#include <span>
#include <vector>

#include "parkdyn/event_log.hpp"
#include "parkdyn/micro_sim.hpp"

namespace parkdyn {

/// Vehicle-distance and vehicle-time spent on the network during a slice
/// starting at `t_s`. A slice may be one vehicle's or a whole-network sum.
struct TravelSample {
  double t_s = 0.0;
  double distance_km = 0.0;
  double time_hr = 0.0;
};

struct NfdPoint {
  double t_s = 0.0;   // window start
  double density = 0.0;  // K, veh/km
  double flow = 0.0;     // Q, veh/hr
  double speed = 0.0;    // V = Q/K, km/hr
  double accumulation = 0.0;  // K * L, veh
};

/// Edie's generalised definitions over windows [w*W, (w+1)*W). Windows with
/// no vehicle-time are omitted. Throws std::invalid_argument for
/// non-positive length or window.
std::vector<NfdPoint> measure_nfd(std::span<const TravelSample> samples,
                                  double network_length_km, double window_s);

std::vector<TravelSample> travel_samples(std::span<const StepSample> trace);

struct PerformanceMetrics {
  double avg_travel_time_s = 0.0;
  double avg_delay_s = 0.0;
  double avg_speed = 0.0;        // total distance / total time, km/hr
  double avg_distance_km = 0.0;
  std::optional<double> completion_rate;  // absent without parking demand
  std::vector<double> distance_to_park_km;
  std::optional<double> mean_distance_to_park_km;
  double total_cruise_time_hr = 0.0;    // on-street family iv
  double total_circuit_time_hr = 0.0;   // lot deadweight
  double total_travel_time_hr = 0.0;    // on-street, all vehicles
  std::vector<double> occupancy_series; // on-street, per window
  double occupancy_window_s = 60.0;
};

/// Summary statistics of a finished run. Vehicles still driving at the
/// horizon count with the time they have spent so far.
PerformanceMetrics performance_metrics(const ParkingEventLog& log);
PerformanceMetrics performance_metrics(const RunResult& run, double occupancy_window_s = 60.0);

}  // namespace parkdyn
