#include "parkdyn/micro_measure.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace parkdyn {

std::vector<NfdPoint> measure_nfd(std::span<const TravelSample> samples, double L, double window_s) {
  if (!(L > 0.0)) throw std::invalid_argument("network length must be > 0");
  if (!(window_s > 0.0)) throw std::invalid_argument("window must be > 0");
  std::map<long, std::pair<double, double>> sums;  // window -> (veh-km, veh-hr)
  for (const auto& s : samples) {
    auto& acc = sums[long(std::floor(s.t_s / window_s))];
    acc.first += s.distance_km;
    acc.second += s.time_hr;
  }
  const double area = L * window_s / 3600.0;  // km * hr
  std::vector<NfdPoint> out;
  for (const auto& [w, dt] : sums) {
    if (!(dt.second > 0.0)) continue;
    NfdPoint p;
    p.t_s = w * window_s;
    p.flow = dt.first / area;
    p.density = dt.second / area;
    p.speed = dt.first / dt.second;
    p.accumulation = p.density * L;
    out.push_back(p);
  }
  return out;
}

std::vector<TravelSample> travel_samples(std::span<const StepSample> trace) {
  std::vector<TravelSample> out;
  out.reserve(trace.size());
  for (const auto& s : trace) out.push_back({s.t_s, s.distance_km, s.time_hr});
  return out;
}

namespace {

PerformanceMetrics vehicle_metrics(const ParkingEventLog& log) {
  PerformanceMetrics m;
  double travel = 0.0, delay = 0.0, dist = 0.0, time = 0.0;
  int parkers = 0, parked = 0;
  for (const auto& v : log.vehicles) {
    double on_road = 0.0;
    for (double h : v.time_hr) on_road += h;
    const double total = on_road + v.circuit_hr;
    travel += total * 3600.0;
    delay += (total - v.free_flow_hr) * 3600.0;
    dist += v.total_dist_km;
    time += on_road;
    m.total_cruise_time_hr += v.time_hr[3];
    m.total_circuit_time_hr += v.circuit_hr;
    if (v.is_parker) {
      ++parkers;
      if (v.parked) {
        ++parked;
        m.distance_to_park_km.push_back(v.dist_km[3] + v.circuit_km);
      }
    }
  }
  m.total_travel_time_hr = time;
  const auto n = log.vehicles.size();
  if (n > 0) {
    m.avg_travel_time_s = travel / n;
    m.avg_delay_s = delay / n;
    m.avg_distance_km = dist / n;
  }
  m.avg_speed = time > 0.0 ? dist / time : 0.0;
  if (parkers > 0) m.completion_rate = double(parked) / parkers;
  if (!m.distance_to_park_km.empty()) {
    double s = 0.0;
    for (double d : m.distance_to_park_km) s += d;
    m.mean_distance_to_park_km = s / m.distance_to_park_km.size();
  }
  return m;
}

}  // namespace

PerformanceMetrics performance_metrics(const ParkingEventLog& log) {
  PerformanceMetrics m = vehicle_metrics(log);
  // Occupancy from the snapshots carried by the events, held between events.
  const double w = m.occupancy_window_s;
  const auto windows = std::size_t(std::ceil(log.horizon_s / w));
  double last = log.events.empty() ? 0.0 : log.events.front().occ_on;
  std::size_t e = 0;
  for (std::size_t k = 0; k < windows; ++k) {
    double sum = 0.0;
    int n = 0;
    while (e < log.events.size() && log.events[e].t_s < (k + 1) * w) {
      sum += log.events[e].occ_on;
      last = log.events[e].occ_on;
      ++n;
      ++e;
    }
    m.occupancy_series.push_back(n > 0 ? sum / n : last);
  }
  return m;
}

PerformanceMetrics performance_metrics(const RunResult& run, double window_s) {
  if (!(window_s > 0.0)) throw std::invalid_argument("window must be > 0");
  PerformanceMetrics m = vehicle_metrics(run.log);
  m.occupancy_window_s = window_s;
  if (run.on_street_capacity <= 0) return m;
  std::map<long, std::pair<double, double>> acc;  // window -> (occ * dt, dt)
  for (const auto& s : run.trace) {
    auto& a = acc[long(std::floor(s.t_s / window_s))];
    a.first += double(s.parked_on) / run.on_street_capacity * s.dt_s;
    a.second += s.dt_s;
  }
  for (const auto& [w, a] : acc) m.occupancy_series.push_back(a.first / a.second);
  return m;
}

}  // namespace parkdyn
