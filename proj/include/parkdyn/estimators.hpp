#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace parkdyn {

enum class DistanceKind {
  ExpTime,          // T = a exp(b O), minutes
  HyperbolicTime,   // T = c / (1 - O), minutes
  Geometric,        // L = d_p / (1 - O), km
  ModifiedGeometric,  // L = d_np / (1 - O^m) + d / (1 - O), km
  ExpDistance,      // L = a exp(b O), km
};

std::string_view kind_name(DistanceKind k);
DistanceKind kind_from_name(std::string_view name);

/// Occupancy-to-search-cost relation. Unused parameters stay zero.
struct DistanceModel {
  DistanceKind kind = DistanceKind::ExpDistance;
  double a = 0.0;  // ExpTime, ExpDistance
  double b = 0.0;
  double c = 0.0;     // HyperbolicTime
  double d_p = 0.0;   // Geometric
  double d_np = 0.0;  // ModifiedGeometric
  double d = 0.0;
  double m = 1.0;

  static DistanceModel exp_distance(double a, double b) {
    return {DistanceKind::ExpDistance, a, b};
  }
  static DistanceModel geometric(double d_p) {
    DistanceModel dm{DistanceKind::Geometric};
    dm.d_p = d_p;
    return dm;
  }

  bool operator==(const DistanceModel&) const = default;
};

/// Throws SingularityError at O == 1 for the kinds with a (1 - O)
/// denominator, std::invalid_argument outside [0, 1].
double evaluate(const DistanceModel& model, double occupancy);

/// Occupancy ceiling applied before singular kinds in the macro model.
inline constexpr double kSaturationOccupancy = 0.999;
double evaluate_saturated(const DistanceModel& model, double occupancy);

struct FitResult {
  DistanceModel model;
  double rmse = 0.0;
  double r_squared = 0.0;
};

/// Least squares: log-linear for the exponential kinds, closed form for the
/// single-coefficient hyperbolic kinds, and a profile search over m for the
/// modified geometric kind. Throws FitDegenerateError for too few points or
/// a single distinct occupancy.
FitResult fit(std::span<const std::pair<double, double>> observations, DistanceKind kind);

/// Mean number of spots screened until a free one, each spot free with
/// probability 1 - O. Draws are split in fixed blocks with their own
/// streams, so the OpenMP and serial versions agree bit for bit.
double monte_carlo_screening(double occupancy, std::int64_t trials, std::uint64_t seed);
double monte_carlo_screening_serial(double occupancy, std::int64_t trials, std::uint64_t seed);

}  // namespace parkdyn
