#include "parkdyn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <array>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "json_fields.hpp"
#include "parkdyn/error.hpp"
#include "parkdyn/micro_measure.hpp"

namespace parkdyn {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const double pos = q * (v.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

struct Logistic {
  // theta = (log v0, n0, log w)
  static double eval(const Eigen::Vector3d& th, double n) {
    return std::exp(th(0)) / (1.0 + std::exp((n - th(1)) / std::exp(th(2))));
  }
};

// Weighted Levenberg-Marquardt with Marquardt diagonal scaling.
double levenberg_marquardt(Eigen::Vector3d& th, std::span<const NfdSample> s,
                           const std::vector<double>& wt) {
  const auto m = static_cast<Eigen::Index>(s.size());
  auto cost_of = [&](const Eigen::Vector3d& t) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double r = s[i].speed - Logistic::eval(t, s[i].accumulation);
      c += wt[i] * r * r;
    }
    return c;
  };
  double cost = cost_of(th);
  double lambda = 1e-3;
  for (int it = 0; it < 500; ++it) {
    Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
    Eigen::Vector3d Jtr = Eigen::Vector3d::Zero();
    const double v0 = std::exp(th(0)), w = std::exp(th(2));
    for (Eigen::Index i = 0; i < m; ++i) {
      const double z = std::exp((s[i].accumulation - th(1)) / w);
      const double f = v0 / (1.0 + z);
      Eigen::Vector3d g;
      g(0) = f;
      const double d = f * z / (1.0 + z);  // -df/d(arg), arg = (n - n0) / w
      g(1) = d / w;
      g(2) = d * (s[i].accumulation - th(1)) / w;
      const double r = s[i].speed - f;
      JtJ += wt[i] * g * g.transpose();
      Jtr += wt[i] * g * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix3d A = JtJ;
      for (int k = 0; k < 3; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
      const Eigen::Vector3d step = A.ldlt().solve(Jtr);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Eigen::Vector3d cand = th + step;
      const double c = cost_of(cand);
      if (std::isfinite(c) && c < cost) {
        const double gain = cost - c;
        th = cand;
        cost = c;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (gain <= 1e-15 * std::max(cost, 1e-300) || step.norm() < 1e-12) return cost;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return cost;
}

}  // namespace

NfdFit fit_nfd(std::span<const NfdSample> samples, const NfdFitOptions& opt) {
  if (!(opt.bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  if (int(samples.size()) < opt.min_samples)
    throw FitDegenerateError("NFD fit needs at least " + std::to_string(opt.min_samples) +
                             " samples, got " + std::to_string(samples.size()));
  std::map<long, int> bins;
  for (const auto& s : samples) ++bins[long(std::floor(s.accumulation / opt.bin_width))];
  if (int(bins.size()) < opt.min_bins)
    throw FitDegenerateError("NFD samples span only " + std::to_string(bins.size()) +
                             " accumulation bins");
  std::vector<double> wt(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    wt[i] = 1.0 / bins[long(std::floor(samples[i].accumulation / opt.bin_width))];

  std::vector<double> ns;
  double vmax = 0.0;
  for (const auto& s : samples) {
    ns.push_back(s.accumulation);
    vmax = std::max(vmax, s.speed);
  }
  if (!(vmax > 0.0)) throw FitDegenerateError("NFD samples have no positive speed");
  std::sort(ns.begin(), ns.end());
  const double median = quantile_sorted(ns, 0.5);
  const double iqr = std::max(quantile_sorted(ns, 0.75) - quantile_sorted(ns, 0.25),
                              opt.bin_width);

  Eigen::Vector3d start(std::log(vmax), median, std::log(iqr));
  Eigen::Vector3d best = start;
  double best_cost = levenberg_marquardt(best, samples, wt);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int r = 0; r < opt.restarts; ++r) {
    Eigen::Vector3d th(start(0) + 0.5 * u(rng), median + 2.0 * iqr * u(rng),
                       start(2) + 1.5 * u(rng));
    const double c = levenberg_marquardt(th, samples, wt);
    if (c < best_cost) best_cost = c, best = th;
  }

  NfdFit f;
  f.model = {std::exp(best(0)), best(1), std::exp(best(2))};
  double wsum = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = samples[i].speed - nfd_speed(f.model, samples[i].accumulation);
    sse += r * r;
    wsum += wt[i];
  }
  f.weighted_rmse = std::sqrt(best_cost / wsum);
  f.rmse = std::sqrt(sse / samples.size());
  f.samples = int(samples.size());
  f.bins = int(bins.size());
  return f;
}

std::vector<NfdSample> nfd_samples(const RunResult& run, double window_s) {
  const auto samples = travel_samples(run.trace);
  std::vector<NfdSample> out;
  for (const auto& p : measure_nfd(samples, run.network_length_km, window_s))
    out.push_back({p.accumulation, p.speed});
  return out;
}

MovingDistances estimate_moving_distances(std::span<const ParkingEventLog> logs) {
  std::array<std::vector<double>, 3> per_log_means;
  std::array<int, 3> members{};
  for (const auto& log : logs) {
    std::array<double, 3> sum{};
    std::array<int, 3> count{};
    for (const auto& e : log.events) {
      int f = -1;
      if (e.from == Family::MovingOn) f = 0;
      if (e.from == Family::MovingOff) f = 1;
      if (e.from == Family::Transit) f = 2;
      if (f < 0) continue;
      sum[f] += e.dist_km;
      ++count[f];
    }
    for (int f = 0; f < 3; ++f) {
      if (count[f] == 0) continue;
      per_log_means[f].push_back(sum[f] / count[f]);
      members[f] += count[f];
    }
  }
  MovingDistances out;
  MovingDistance* slots[] = {&out.on, &out.off, &out.pass};
  for (int f = 0; f < 3; ++f) {
    const auto& v = per_log_means[f];
    slots[f]->members = members[f];
    if (v.empty()) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    slots[f]->mean_km = mean;
    slots[f]->stddev_km = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
  }
  return out;
}

std::vector<OccupancyObservation> extract_occupancy_distance(std::span<const ParkingEventLog> logs,
                                                             TrendFilter filter,
                                                             OccupancyRef ref) {
  std::vector<OccupancyObservation> out;
  for (const auto& log : logs) {
    std::map<int, double> cruise_start;  // vehicle -> occ_on when cruising began
    for (const auto& e : log.events) {
      if (e.to == Family::Cruising) {
        cruise_start[e.vehicle_id] = e.occ_on;
        continue;
      }
      if (e.to != Family::ParkedOn) continue;
      double start = e.occ_on;
      double dist = 0.0;
      if (e.from == Family::Cruising) {
        auto it = cruise_start.find(e.vehicle_id);
        if (it == cruise_start.end()) continue;
        start = it->second;
        dist = e.dist_km;
      }
      OccupancyObservation o;
      o.increasing = e.occ_on >= start;
      o.occupancy = ref == OccupancyRef::Init ? start : 0.5 * (start + e.occ_on);
      o.distance_km = dist;
      if (filter == TrendFilter::Increasing && !o.increasing) continue;
      if (filter == TrendFilter::Decreasing && o.increasing) continue;
      out.push_back(o);
    }
  }
  return out;
}

FitResult fit_occupancy_distance(std::span<const OccupancyObservation> obs, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  std::map<long, std::array<double, 3>> bins;  // sum O, sum d, count
  for (const auto& o : obs) {
    auto& b = bins[long(std::floor(o.occupancy / bin_width + 1e-9))];
    b[0] += o.occupancy;
    b[1] += o.distance_km;
    b[2] += 1.0;
  }
  std::vector<std::pair<double, double>> means;
  for (const auto& [k, b] : bins) {
    const double d = b[1] / b[2];
    if (d > 0.0) means.emplace_back(std::min(b[0] / b[2], 1.0 - 1e-9), d);
  }
  return fit(means, DistanceKind::ExpDistance);
}

ChangeRateSummary occupancy_change_rate(std::span<const ParkingEventLog> logs) {
  std::vector<double> rates;
  for (const auto& log : logs) {
    if (log.events.empty()) continue;
    double occ = log.events.front().occ_on;
    std::size_t e = 0;
    double prev = occ;
    const auto minutes = long(std::ceil(log.horizon_s / 60.0));
    for (long m = 1; m <= minutes; ++m) {
      while (e < log.events.size() && log.events[e].t_s <= m * 60.0) occ = log.events[e++].occ_on;
      rates.push_back(std::abs(occ - prev));
      prev = occ;
    }
  }
  ChangeRateSummary s;
  if (rates.empty()) return s;
  std::sort(rates.begin(), rates.end());
  s.p50 = quantile_sorted(rates, 0.5);
  s.p90 = quantile_sorted(rates, 0.9);
  s.max = rates.back();
  return s;
}

MicroSeries sample_micro(const RunResult& run, double dt_hr) {
  if (!(dt_hr > 0.0)) throw std::invalid_argument("dt must be > 0");
  MicroSeries m;
  if (run.trace.empty()) return m;
  const double dt_s = dt_hr * 3600.0;
  const double horizon = run.log.horizon_s;
  const auto K = long(std::llround(horizon / dt_s));
  std::size_t i = 0;
  double dist = 0.0, time = 0.0;
  for (long k = 0; k <= K; ++k) {
    const double t = k * dt_s;
    while (i + 1 < run.trace.size() && run.trace[i].t_s + run.trace[i].dt_s <= t + 1e-9) {
      dist += run.trace[i].distance_km;
      time += run.trace[i].time_hr;
      ++i;
    }
    // trace[i - 1] ends at or before t; at k = 0 use the first step.
    const auto& s = run.trace[i == 0 ? 0 : i - 1];
    m.t_hr.push_back(k * dt_hr);
    m.n_on.push_back(s.parked_on);
    m.n_off.push_back(s.parked_off);
    m.n.push_back(s.active());
    m.v.push_back(k > 0 && time > 0.0 ? dist / time : std::numeric_limits<double>::quiet_NaN());
    dist = 0.0;
    time = 0.0;
  }
  return m;
}

TrajectoryErrors compare_series(std::span<const double> macro,
                                std::span<const std::vector<double>> micro) {
  for (const auto& r : micro)
    if (r.size() != macro.size())
      throw std::invalid_argument("macro and micro series have different time grids");
  TrajectoryErrors e;
  double max_diff = 0.0, max_ref = 0.0, sse = 0.0;
  int inside = 0;
  for (std::size_t t = 0; t < macro.size(); ++t) {
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    int n = 0;
    for (const auto& r : micro) {
      if (std::isnan(r[t])) continue;
      sum += r[t];
      lo = std::min(lo, r[t]);
      hi = std::max(hi, r[t]);
      ++n;
    }
    if (n == 0 || std::isnan(macro[t])) continue;
    const double mean = sum / n;
    const double diff = std::abs(macro[t] - mean);
    max_diff = std::max(max_diff, diff);
    max_ref = std::max(max_ref, std::abs(mean));
    sse += diff * diff;
    const double tol = 1e-9 * std::max(1.0, std::abs(mean));
    if (macro[t] >= lo - tol && macro[t] <= hi + tol) ++inside;
    ++e.steps;
  }
  if (e.steps == 0) return e;
  e.peak_relative_error = max_ref > 0.0 ? max_diff / max_ref
                                        : (max_diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  e.rmse = std::sqrt(sse / e.steps);
  e.envelope_fraction = double(inside) / e.steps;
  return e;
}

ValidationMetrics validate(const MacroTrajectory& macro, std::span<const MicroSeries> micro) {
  if (micro.empty()) throw std::invalid_argument("no micro replications to validate against");
  auto collect = [&](auto member) {
    std::vector<std::vector<double>> out;
    for (const auto& m : micro) out.push_back(m.*member);
    return out;
  };
  ValidationMetrics v;
  v.n_off = compare_series(macro.n_off, collect(&MicroSeries::n_off));
  v.n_on = compare_series(macro.n_on, collect(&MicroSeries::n_on));
  v.n = compare_series(macro.n, collect(&MicroSeries::n));
  v.v = compare_series(macro.v, collect(&MicroSeries::v));
  return v;
}

CalibrationReport calibrate(std::span<const ParkingEventLog> logs,
                            std::span<const NfdSample> samples, const CalibrationOptions& opt) {
  if (logs.empty()) throw std::invalid_argument("calibration needs at least one event log");
  CalibrationReport r;
  r.nfd = fit_nfd(samples, opt.nfd);
  r.distances = estimate_moving_distances(logs);
  r.filter = opt.filter;
  r.ref = opt.ref;
  const auto obs = extract_occupancy_distance(logs, opt.filter, opt.ref);
  r.distance_fit = fit_occupancy_distance(obs);
  r.change_rate = occupancy_change_rate(logs);
  r.replications = int(logs.size());
  return r;
}

CalibrationReport calibrate(std::span<const RunResult> runs, const CalibrationOptions& opt) {
  std::vector<ParkingEventLog> logs;
  std::vector<NfdSample> samples;
  for (const auto& run : runs) {
    logs.push_back(run.log);
    const auto s = nfd_samples(run, opt.nfd_window_s);
    samples.insert(samples.end(), s.begin(), s.end());
  }
  return calibrate(logs, samples, opt);
}

MacroParams apply_calibration(MacroParams base, const CalibrationReport& r) {
  base.nfd = r.nfd.model;
  if (r.distances.on.mean_km) base.l_m_on = *r.distances.on.mean_km;
  if (r.distances.off.mean_km) base.l_m_off = *r.distances.off.mean_km;
  if (r.distances.pass.mean_km) base.l_m_pass = *r.distances.pass.mean_km;
  base.distance = r.distance_fit.model;
  return base;
}

namespace {

const char* filter_name(TrendFilter f) {
  switch (f) {
    case TrendFilter::Increasing: return "increasing";
    case TrendFilter::Decreasing: return "decreasing";
    case TrendFilter::Both: return "both";
  }
  return "both";
}

nlohmann::json distance_json(const MovingDistance& d) {
  nlohmann::json j{{"stddev_km", d.stddev_km}, {"members", d.members}};
  j["mean_km"] = d.mean_km ? nlohmann::json(*d.mean_km) : nlohmann::json(nullptr);
  return j;
}

MovingDistance distance_from(const nlohmann::json& j, const std::string& path) {
  MovingDistance d;
  if (j.contains("mean_km") && !j["mean_km"].is_null())
    d.mean_km = detail::field<double>(j, "mean_km", path);
  d.stddev_km = detail::field_or<double>(j, "stddev_km", 0.0, path);
  d.members = detail::field_or<int>(j, "members", 0, path);
  return d;
}

}  // namespace

nlohmann::json calibration_to_json(const CalibrationReport& r) {
  nlohmann::json j;
  j["nfd"] = {{"v0", r.nfd.model.v0},
              {"n0", r.nfd.model.n0},
              {"w", r.nfd.model.w},
              {"weighted_rmse", r.nfd.weighted_rmse},
              {"rmse", r.nfd.rmse},
              {"samples", r.nfd.samples},
              {"bins", r.nfd.bins}};
  j["moving_distances"] = {{"on", distance_json(r.distances.on)},
                           {"off", distance_json(r.distances.off)},
                           {"pass", distance_json(r.distances.pass)}};
  j["distance_model"] = {{"kind", kind_name(r.distance_fit.model.kind)},
                         {"a", r.distance_fit.model.a},
                         {"b", r.distance_fit.model.b},
                         {"rmse", r.distance_fit.rmse},
                         {"r_squared", r.distance_fit.r_squared}};
  j["filter"] = filter_name(r.filter);
  j["ref"] = r.ref == OccupancyRef::Init ? "init" : "avg";
  j["occupancy_change_per_min"] = {
      {"p50", r.change_rate.p50}, {"p90", r.change_rate.p90}, {"max", r.change_rate.max}};
  j["replications"] = r.replications;
  return j;
}

CalibrationReport calibration_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nfd") || !j.contains("distance_model"))
    throw ParseError("calibration: needs 'nfd' and 'distance_model' objects");
  using detail::field;
  using detail::field_or;
  CalibrationReport r;
  const auto& nfd = j.at("nfd");
  r.nfd.model = {field<double>(nfd, "v0", "nfd"), field<double>(nfd, "n0", "nfd"),
                 field<double>(nfd, "w", "nfd")};
  r.nfd.weighted_rmse = field_or<double>(nfd, "weighted_rmse", 0.0, "nfd");
  r.nfd.rmse = field_or<double>(nfd, "rmse", 0.0, "nfd");
  r.nfd.samples = field_or<int>(nfd, "samples", 0, "nfd");
  r.nfd.bins = field_or<int>(nfd, "bins", 0, "nfd");
  if (j.contains("moving_distances")) {
    const auto& md = j["moving_distances"];
    if (md.contains("on")) r.distances.on = distance_from(md["on"], "moving_distances.on");
    if (md.contains("off")) r.distances.off = distance_from(md["off"], "moving_distances.off");
    if (md.contains("pass")) r.distances.pass = distance_from(md["pass"], "moving_distances.pass");
  }
  const auto& dm = j.at("distance_model");
  r.distance_fit.model.kind =
      kind_from_name(field_or<std::string>(dm, "kind", "exp-distance", "distance_model"));
  r.distance_fit.model.a = field<double>(dm, "a", "distance_model");
  r.distance_fit.model.b = field<double>(dm, "b", "distance_model");
  r.distance_fit.rmse = field_or<double>(dm, "rmse", 0.0, "distance_model");
  r.distance_fit.r_squared = field_or<double>(dm, "r_squared", 0.0, "distance_model");
  const auto filter = field_or<std::string>(j, "filter", "increasing", "calibration");
  r.filter = filter == "decreasing" ? TrendFilter::Decreasing
             : filter == "both"     ? TrendFilter::Both
                                    : TrendFilter::Increasing;
  r.ref = field_or<std::string>(j, "ref", "init", "calibration") == "avg" ? OccupancyRef::Avg
                                                                          : OccupancyRef::Init;
  if (j.contains("occupancy_change_per_min")) {
    const auto& c = j["occupancy_change_per_min"];
    r.change_rate = {field_or<double>(c, "p50", 0.0, "change"), field_or<double>(c, "p90", 0.0, "change"),
                     field_or<double>(c, "max", 0.0, "change")};
  }
  r.replications = field_or<int>(j, "replications", 0, "calibration");
  return r;
}

}  // namespace parkdyn
