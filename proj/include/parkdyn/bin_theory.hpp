#pragma once

#include <span>
#include <vector>

namespace parkdyn::theory {

/// Two equal-length bins sharing a Greenshields link model. Densities are
/// per bin; the network density K is their *average*, so every split obeys
/// k1 + k2 = 2K.
struct BinParams {
  double free_flow_speed = 50.0;  // v_f
  double cruise_speed = 50.0;     // v_c, 0 < v_c <= v_f
  double jam_density = 100.0;     // k_j

  void validate() const;
};

struct Envelope {
  double v_max = 0.0;
  double v_min = 0.0;
};

/// k_c = (v_f - v_c) k_j / v_f: below it a cruiser can hold v_c.
double critical_density(const BinParams& p);

/// Space-mean speed of the two-bin system, (k1 v1 + k2 v2) / (k1 + k2).
/// With `cruising_in_bin2` bin 2 runs at min(v_c, greenshields(k2)).
/// Returns v_f when both bins are empty.
double two_bin_speed(double k1, double k2, const BinParams& p, bool cruising_in_bin2);

/// Closed-form envelopes without cruising (V_min hits zero at k_j / 2).
Envelope envelope_no_cruising(double K, const BinParams& p);

/// Closed-form envelopes when every bin-2 vehicle cruises.
Envelope envelope_with_cruising(double K, const BinParams& p);

/// Oracle: scan every split k1 in [max(0, 2K - k_j), min(k_j, 2K)] on a
/// `grid_step` lattice (endpoints included) and take extrema of
/// two_bin_speed.
Envelope brute_force_envelope(double K, const BinParams& p, bool cruising, double grid_step);

/// Integral over K in [0, k_j] of V_max - V_min (km/hr * veh/km).
double unstable_area(const BinParams& p, bool cruising);

/// Branch points of the piecewise envelopes, for continuity checks.
std::vector<double> branch_points(const BinParams& p, bool cruising);

struct EnvelopeRow {
  double K = 0.0;
  Envelope formula;
  Envelope brute;
};

/// Formula and brute-force envelopes over `densities`. The OpenMP version
/// splits the K loop across threads; the serial one is the reference.
std::vector<EnvelopeRow> sweep_envelopes(std::span<const double> densities, const BinParams& p,
                                         bool cruising, double grid_step);
std::vector<EnvelopeRow> sweep_envelopes_serial(std::span<const double> densities,
                                                const BinParams& p, bool cruising,
                                                double grid_step);

}  // namespace parkdyn::theory
