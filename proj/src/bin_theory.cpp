#include "parkdyn/bin_theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parkdyn/network.hpp"

namespace parkdyn::theory {

void BinParams::validate() const {
  if (!(free_flow_speed > 0.0)) throw std::invalid_argument("v_f must be > 0");
  if (!(cruise_speed > 0.0) || cruise_speed > free_flow_speed)
    throw std::invalid_argument("need 0 < v_c <= v_f");
  if (!(jam_density > 0.0)) throw std::invalid_argument("k_j must be > 0");
}

double critical_density(const BinParams& p) {
  p.validate();
  return (p.free_flow_speed - p.cruise_speed) * p.jam_density / p.free_flow_speed;
}

double two_bin_speed(double k1, double k2, const BinParams& p, bool cruising_in_bin2) {
  p.validate();
  if (k1 < 0.0 || k2 < 0.0 || k1 > p.jam_density || k2 > p.jam_density)
    throw std::invalid_argument("bin density outside [0, k_j]");
  if (k1 + k2 == 0.0) return p.free_flow_speed;
  const double v1 = greenshields_speed(k1, p.free_flow_speed, p.jam_density);
  double v2 = greenshields_speed(k2, p.free_flow_speed, p.jam_density);
  if (cruising_in_bin2) v2 = std::min(p.cruise_speed, v2);
  return (k1 * v1 + k2 * v2) / (k1 + k2);
}

namespace {
void check_density(double K, const BinParams& p) {
  p.validate();
  if (!(K >= 0.0) || K > p.jam_density) throw std::invalid_argument("K outside [0, k_j]");
}
}  // namespace

Envelope envelope_no_cruising(double K, const BinParams& p) {
  check_density(K, p);
  const double vf = p.free_flow_speed, kj = p.jam_density;
  Envelope e;
  e.v_max = vf - vf * K / kj;
  if (K <= kj / 2)
    e.v_min = vf - 2 * vf * K / kj;
  else
    e.v_min = vf * (3 - 2 * K / kj - kj / K);
  return e;
}

Envelope envelope_with_cruising(double K, const BinParams& p) {
  check_density(K, p);
  const double vf = p.free_flow_speed, vc = p.cruise_speed, kj = p.jam_density;
  const double kc = critical_density(p);
  Envelope e;
  if (K <= kc / 4)
    e.v_max = vf - 2 * vf * K / kj;
  else if (K <= 3 * kc / 4)
    e.v_max = vc + (vf - vc) * kc / (8 * K);
  else if (K <= kc)
    e.v_max = vc + (vf - vc) * (2 - kc / K) * (1 - K / kc);
  else
    e.v_max = vf - vf * K / kj;

  if (K <= kc / 2)
    e.v_min = vc;
  else if (K <= kj / 2)
    e.v_min = vf - 2 * vf * K / kj;
  else if (K <= (kc + kj) / 2)
    e.v_min = vc - vc * kj / (2 * K);
  else
    e.v_min = vf * (3 - 2 * K / kj - kj / K);
  return e;
}

Envelope brute_force_envelope(double K, const BinParams& p, bool cruising, double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be > 0");
  check_density(K, p);
  const double kj = p.jam_density;
  const double lo = std::max(0.0, 2 * K - kj);
  const double hi = std::min(kj, 2 * K);
  if (lo > hi) throw std::invalid_argument("no feasible density split");
  const auto n = static_cast<long>(std::floor((hi - lo) / grid_step + 1e-9));
  Envelope e{-1e300, 1e300};
  auto visit = [&](double k1) {
    k1 = std::clamp(k1, lo, hi);
    const double k2 = std::clamp(2 * K - k1, 0.0, kj);
    const double v = two_bin_speed(k1, k2, p, cruising);
    e.v_max = std::max(e.v_max, v);
    e.v_min = std::min(e.v_min, v);
  };
  for (long i = 0; i <= n; ++i) visit(lo + i * grid_step);
  visit(hi);
  return e;
}

std::vector<double> branch_points(const BinParams& p, bool cruising) {
  const double kj = p.jam_density;
  if (!cruising) return {kj / 2};
  const double kc = critical_density(p);
  return {kc / 4, 3 * kc / 4, kc, kc / 2, kj / 2, (kc + kj) / 2};
}

double unstable_area(const BinParams& p, bool cruising) {
  p.validate();
  const double kj = p.jam_density;
  std::vector<double> knots = branch_points(p, cruising);
  knots.push_back(0.0);
  knots.push_back(kj);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  auto gap = [&](double K) {
    const Envelope e = cruising ? envelope_with_cruising(K, p) : envelope_no_cruising(K, p);
    return e.v_max - e.v_min;
  };
  // Composite Simpson on each smooth piece.
  constexpr int kPanels = 400;
  double area = 0.0;
  for (std::size_t s = 1; s < knots.size(); ++s) {
    const double a = knots[s - 1], b = knots[s];
    if (b - a <= 0.0) continue;
    const double h = (b - a) / kPanels;
    // Nudge the ends inside the piece so each formula branch is used on its own interval.
    const double eps = 1e-12 * kj;
    double sum = gap(a + eps) + gap(b);
    for (int i = 1; i < kPanels; ++i) sum += gap(a + i * h) * (i % 2 ? 4.0 : 2.0);
    area += sum * h / 3.0;
  }
  return area;
}

std::vector<EnvelopeRow> sweep_envelopes(std::span<const double> densities, const BinParams& p,
                                         bool cruising, double grid_step) {
  // Throwing inside the parallel region would terminate, so check up front.
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be > 0");
  for (double K : densities) check_density(K, p);
  std::vector<EnvelopeRow> rows(densities.size());
  const auto n = static_cast<long>(densities.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    const double K = densities[i];
    rows[i].K = K;
    rows[i].formula = cruising ? envelope_with_cruising(K, p) : envelope_no_cruising(K, p);
    rows[i].brute = brute_force_envelope(K, p, cruising, grid_step);
  }
  return rows;
}

std::vector<EnvelopeRow> sweep_envelopes_serial(std::span<const double> densities,
                                                const BinParams& p, bool cruising,
                                                double grid_step) {
  std::vector<EnvelopeRow> rows;
  rows.reserve(densities.size());
  for (double K : densities) {
    EnvelopeRow r;
    r.K = K;
    r.formula = cruising ? envelope_with_cruising(K, p) : envelope_no_cruising(K, p);
    r.brute = brute_force_envelope(K, p, cruising, grid_step);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace parkdyn::theory
