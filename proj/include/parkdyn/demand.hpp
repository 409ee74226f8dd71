#pragma once

#include <utility>
#include <vector>

namespace parkdyn {

/// Parking-duration distribution, queried through its CDF (hours).
class DurationDistribution {
 public:
  static DurationDistribution uniform(double lo_hr, double hi_hr);
  /// Piecewise-linear CDF through (x_hr, F) points. Must start at F = 0,
  /// end at F = 1, and be non-decreasing in both coordinates.
  static DurationDistribution table(std::vector<std::pair<double, double>> points);

  bool is_uniform() const { return uniform_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<std::pair<double, double>>& points() const { return points_; }

  double cdf(double x_hr) const;
  /// Inverse CDF; `u` in [0, 1].
  double quantile(double u) const;
  double mean() const;

  bool operator==(const DurationDistribution&) const = default;

 private:
  DurationDistribution() = default;
  bool uniform_ = true;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::vector<std::pair<double, double>> points_;
};

enum class TripPurpose { ParkOn, ParkOff, Pass };

/// One vehicle's scheduled trip. Random draws that a price change must not
/// disturb (choice, target, duration, speeds) are made once, up front, so
/// that scenarios differing only in prices share their random numbers.
struct TripChain {
  int vehicle_id = 0;
  double entry_time_s = 0.0;
  std::size_t origin_node = 0;       // node index
  std::size_t destination_node = 0;  // exit node index (passers, re-departures)
  bool is_parker = false;            // false -> pass-through
  TripPurpose purpose = TripPurpose::Pass;  // resolved at injection for parkers
  double choice_u = 0.0;             // uniform draw consumed by the logit choice
  double target_u = 0.0;             // uniform draw for the on-street target link
  double compliance_u = 0.0;         // compared with guidance compliance
  double parking_duration_hr = 0.0;
  double desired_speed = 50.0;       // km/hr
  double desired_cruise_speed = 30.0;
};

}  // namespace parkdyn
