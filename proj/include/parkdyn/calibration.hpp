#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "parkdyn/estimators.hpp"
#include "parkdyn/event_log.hpp"
#include "parkdyn/macro_model.hpp"
#include "parkdyn/micro_sim.hpp"

namespace parkdyn {

struct NfdSample {
  double accumulation = 0.0;  // veh
  double speed = 0.0;         // km/hr
};

struct NfdFitOptions {
  double bin_width = 10.0;  // veh, for the inverse-count weights
  int restarts = 10;
  std::uint64_t seed = 7;
  int min_samples = 50;
  int min_bins = 3;
};

struct NfdFit {
  NfdModel model;
  double weighted_rmse = 0.0;
  double rmse = 0.0;
  int samples = 0;
  int bins = 0;
};

/// Weighted least-squares logistic fit; each sample weighs 1 / (samples in
/// its accumulation bin) so the dense low-accumulation cloud does not swamp
/// the rest. Levenberg-Marquardt from (max v, median n, IQR n) plus random
/// restarts. Throws FitDegenerateError for too few samples or bins.
NfdFit fit_nfd(std::span<const NfdSample> samples, const NfdFitOptions& options = {});

/// NFD samples of one run: Edie windows of `window_s`, accumulation = K L.
std::vector<NfdSample> nfd_samples(const RunResult& run, double window_s = 60.0);

struct MovingDistance {
  std::optional<double> mean_km;  // absent when no replication has members
  double stddev_km = 0.0;          // across replications
  int members = 0;
};

struct MovingDistances {
  MovingDistance on;    // family i
  MovingDistance off;   // family ii
  MovingDistance pass;  // family iii
};

/// Mean distance driven per completed stay in families i, ii and iii,
/// averaged across logs. Read from the transition events alone. Cruising (family iv) distance is not counted.
MovingDistances estimate_moving_distances(std::span<const ParkingEventLog> logs);

enum class TrendFilter { Increasing, Decreasing, Both };
enum class OccupancyRef { Init, Avg };

struct OccupancyObservation {
  double occupancy = 0.0;
  double distance_km = 0.0;
  bool increasing = true;
};

/// One observation per vehicle that parked on street: occupancy at the
/// start of its search (or the mean of start and end) against its on-street
/// cruising distance. Vehicles that parked without searching contribute a
/// zero distance at the occupancy they parked at. Ties count as increasing.
std::vector<OccupancyObservation> extract_occupancy_distance(std::span<const ParkingEventLog> logs,
                                                             TrendFilter filter, OccupancyRef ref);

/// Exponential occupancy-distance fit to 1%-bin means (bins with a zero
/// mean carry no log information and are skipped).
FitResult fit_occupancy_distance(std::span<const OccupancyObservation> obs,
                                 double bin_width = 0.01);

/// Distribution of on-street occupancy change per minute over all runs, as
/// (p50, p90, max) of |dO/dt|.
struct ChangeRateSummary {
  double p50 = 0.0, p90 = 0.0, max = 0.0;
};
ChangeRateSummary occupancy_change_rate(std::span<const ParkingEventLog> logs);

struct TrajectoryErrors {
  double peak_relative_error = 0.0;  // max_t |macro - micro| / max_t |micro|
  double rmse = 0.0;
  double envelope_fraction = 0.0;    // share of steps inside the micro min-max
  int steps = 0;
};

struct ValidationMetrics {
  TrajectoryErrors n_off, n_on, n, v;
};

/// Micro replications sampled on the macro grid.
struct MicroSeries {
  std::vector<double> t_hr;
  std::vector<double> n_on, n_off, n;
  std::vector<double> v;  // NaN where no vehicle drove during the step
};

MicroSeries sample_micro(const RunResult& run, double dt_hr);

/// Compare one series against replications. Steps where the replication
/// mean is undefined (NaN) are skipped. Throws std::invalid_argument if
/// the time grids differ in length.
TrajectoryErrors compare_series(std::span<const double> macro,
                                std::span<const std::vector<double>> micro);

ValidationMetrics validate(const MacroTrajectory& macro, std::span<const MicroSeries> micro);

struct CalibrationReport {
  NfdFit nfd;
  MovingDistances distances;
  FitResult distance_fit;
  TrendFilter filter = TrendFilter::Increasing;
  OccupancyRef ref = OccupancyRef::Init;
  ChangeRateSummary change_rate;
  int replications = 0;
};

struct CalibrationOptions {
  NfdFitOptions nfd;
  double nfd_window_s = 60.0;
  TrendFilter filter = TrendFilter::Increasing;
  OccupancyRef ref = OccupancyRef::Init;
};

/// The three estimands of the macro model from event logs (transitions
/// only are read) and pooled NFD samples.
CalibrationReport calibrate(std::span<const ParkingEventLog> logs,
                            std::span<const NfdSample> nfd_samples,
                            const CalibrationOptions& opt = {});
CalibrationReport calibrate(std::span<const RunResult> runs, const CalibrationOptions& opt = {});

/// MacroParams for a scenario with the calibrated pieces filled in.
MacroParams apply_calibration(MacroParams base, const CalibrationReport& report);

nlohmann::json calibration_to_json(const CalibrationReport& report);
CalibrationReport calibration_from_json(const nlohmann::json& doc);

}  // namespace parkdyn
