#include "parkdyn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "parkdyn/error.hpp"

namespace parkdyn {

namespace {
constexpr std::string_view kKindNames[] = {"exp-time", "hyperbolic-time", "geometric",
                                           "modified-geometric", "exp-distance"};

bool singular_kind(DistanceKind k) {
  return k == DistanceKind::HyperbolicTime || k == DistanceKind::Geometric ||
         k == DistanceKind::ModifiedGeometric;
}
}  // namespace

std::string_view kind_name(DistanceKind k) { return kKindNames[static_cast<int>(k)]; }

DistanceKind kind_from_name(std::string_view name) {
  for (int i = 0; i < 5; ++i)
    if (kKindNames[i] == name) return static_cast<DistanceKind>(i);
  throw std::invalid_argument("unknown distance model kind '" + std::string(name) + "'");
}

double evaluate(const DistanceModel& m, double O) {
  if (!(O >= 0.0) || O > 1.0) throw std::invalid_argument("occupancy outside [0, 1]");
  if (singular_kind(m.kind) && O >= 1.0)
    throw SingularityError(std::string(kind_name(m.kind)) + " is singular at full occupancy");
  switch (m.kind) {
    case DistanceKind::ExpTime:
    case DistanceKind::ExpDistance: return m.a * std::exp(m.b * O);
    case DistanceKind::HyperbolicTime: return m.c / (1.0 - O);
    case DistanceKind::Geometric: return m.d_p / (1.0 - O);
    case DistanceKind::ModifiedGeometric:
      return m.d_np / (1.0 - std::pow(O, m.m)) + m.d / (1.0 - O);
  }
  return 0.0;
}

double evaluate_saturated(const DistanceModel& m, double O) {
  if (singular_kind(m.kind)) O = std::min(O, kSaturationOccupancy);
  return evaluate(m, O);
}

namespace {

void goodness(FitResult& r, std::span<const std::pair<double, double>> obs) {
  double mean = 0.0;
  for (auto [o, y] : obs) mean += y;
  mean /= obs.size();
  double ss_res = 0.0, ss_tot = 0.0;
  for (auto [o, y] : obs) {
    const double e = y - evaluate(r.model, o);
    ss_res += e * e;
    ss_tot += (y - mean) * (y - mean);
  }
  r.rmse = std::sqrt(ss_res / obs.size());
  r.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

// Linear least squares on the given basis; returns coefficients and SSE.
std::pair<Eigen::VectorXd, double> linear_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  return {beta, (X * beta - y).squaredNorm()};
}

}  // namespace

FitResult fit(std::span<const std::pair<double, double>> obs, DistanceKind kind) {
  const std::size_t need = kind == DistanceKind::ModifiedGeometric ? 3 : 2;
  if (obs.size() < need)
    throw FitDegenerateError("need at least " + std::to_string(need) + " observations");
  std::set<double> distinct;
  for (auto [o, y] : obs) {
    if (!(o >= 0.0) || !(o < 1.0))
      throw std::invalid_argument("fit occupancies must lie in [0, 1)");
    distinct.insert(o);
  }
  if (distinct.size() < need) throw FitDegenerateError("occupancies lack spread");

  const auto n = static_cast<Eigen::Index>(obs.size());
  FitResult r;
  r.model.kind = kind;
  switch (kind) {
    case DistanceKind::ExpTime:
    case DistanceKind::ExpDistance: {
      Eigen::MatrixXd X(n, 2);
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(obs[i].second > 0.0))
          throw FitDegenerateError("exponential fit needs positive values");
        X(i, 0) = 1.0;
        X(i, 1) = obs[i].first;
        y(i) = std::log(obs[i].second);
      }
      auto [beta, sse] = linear_fit(X, y);
      r.model.a = std::exp(beta(0));
      r.model.b = beta(1);
      break;
    }
    case DistanceKind::HyperbolicTime:
    case DistanceKind::Geometric: {
      double sxy = 0.0, sxx = 0.0;
      for (auto [o, y] : obs) {
        const double x = 1.0 / (1.0 - o);
        sxy += x * y;
        sxx += x * x;
      }
      (kind == DistanceKind::Geometric ? r.model.d_p : r.model.c) = sxy / sxx;
      break;
    }
    case DistanceKind::ModifiedGeometric: {
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) y(i) = obs[i].second;
      auto solve_m = [&](double m) {
        Eigen::MatrixXd X(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
          X(i, 0) = 1.0 / (1.0 - std::pow(obs[i].first, m));
          X(i, 1) = 1.0 / (1.0 - obs[i].first);
        }
        return linear_fit(X, y);
      };
      // Coarse log grid over m, then golden-section refinement in log m.
      double best_lm = 0.0, best_sse = std::numeric_limits<double>::infinity();
      for (double lm = std::log(0.05); lm <= std::log(50.0); lm += 0.05) {
        const double sse = solve_m(std::exp(lm)).second;
        if (sse < best_sse) best_sse = sse, best_lm = lm;
      }
      double lo = best_lm - 0.05, hi = best_lm + 0.05;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int it = 0; it < 60; ++it) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        if (solve_m(std::exp(x1)).second < solve_m(std::exp(x2)).second)
          hi = x2;
        else
          lo = x1;
      }
      const double m = std::exp(0.5 * (lo + hi));
      auto [beta, sse] = solve_m(m);
      r.model.m = m;
      r.model.d_np = beta(0);
      r.model.d = beta(1);
      break;
    }
  }
  goodness(r, obs);
  return r;
}

namespace {

constexpr std::int64_t kBlock = 4096;

double screening_block(double p, std::int64_t count, std::uint64_t seed, std::int64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  std::mt19937_64 rng(seq);
  std::geometric_distribution<std::int64_t> failures(p);
  double sum = 0.0;
  for (std::int64_t i = 0; i < count; ++i) sum += 1.0 + double(failures(rng));
  return sum;
}

void check_screening(double O, std::int64_t trials) {
  if (!(O >= 0.0) || !(O < 1.0)) throw std::invalid_argument("occupancy must lie in [0, 1)");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
}

}  // namespace

double monte_carlo_screening(double O, std::int64_t trials, std::uint64_t seed) {
  check_screening(O, trials);
  const std::int64_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<double> sums(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b)
    sums[b] = screening_block(1.0 - O, std::min(kBlock, trials - b * kBlock), seed, b);
  double total = 0.0;
  for (double s : sums) total += s;
  return total / double(trials);
}

double monte_carlo_screening_serial(double O, std::int64_t trials, std::uint64_t seed) {
  check_screening(O, trials);
  const std::int64_t blocks = (trials + kBlock - 1) / kBlock;
  double total = 0.0;
  for (std::int64_t b = 0; b < blocks; ++b)
    total += screening_block(1.0 - O, std::min(kBlock, trials - b * kBlock), seed, b);
  return total / double(trials);
}

}  // namespace parkdyn
