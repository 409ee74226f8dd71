#include "parkdyn/demand.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace parkdyn {

DurationDistribution DurationDistribution::uniform(double lo_hr, double hi_hr) {
  if (!(lo_hr >= 0.0) || !(hi_hr > lo_hr))
    throw std::invalid_argument("uniform duration needs 0 <= lo < hi");
  DurationDistribution d;
  d.uniform_ = true;
  d.lo_ = lo_hr;
  d.hi_ = hi_hr;
  return d;
}

DurationDistribution DurationDistribution::table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("duration table needs at least two points");
  if (points.front().second != 0.0 || points.back().second != 1.0)
    throw std::invalid_argument("duration table must run from F=0 to F=1");
  if (points.front().first < 0.0) throw std::invalid_argument("durations must be non-negative");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].first < points[i - 1].first || points[i].second < points[i - 1].second)
      throw std::invalid_argument("duration table is not a CDF (must be non-decreasing)");
  }
  DurationDistribution d;
  d.uniform_ = false;
  d.lo_ = points.front().first;
  d.hi_ = points.back().first;
  d.points_ = std::move(points);
  return d;
}

double DurationDistribution::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  if (uniform_) return (x - lo_) / (hi_ - lo_);
  auto it = std::upper_bound(points_.begin(), points_.end(), x,
                             [](double v, const auto& p) { return v < p.first; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (b.first == a.first) return b.second;
  return a.second + (b.second - a.second) * (x - a.first) / (b.first - a.first);
}

double DurationDistribution::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  if (uniform_) return lo_ + u * (hi_ - lo_);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& a = points_[i - 1];
    const auto& b = points_[i];
    if (u <= b.second && b.second > a.second)
      return a.first + (b.first - a.first) * (u - a.second) / (b.second - a.second);
  }
  return hi_;
}

double DurationDistribution::mean() const {
  if (uniform_) return 0.5 * (lo_ + hi_);
  double m = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& a = points_[i - 1];
    const auto& b = points_[i];
    m += (b.second - a.second) * 0.5 * (a.first + b.first);
  }
  return m;
}

}  // namespace parkdyn
