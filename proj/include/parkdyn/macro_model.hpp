#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "parkdyn/demand.hpp"
#include "parkdyn/estimators.hpp"

namespace parkdyn {

/// Three-parameter logistic speed-accumulation NFD:
/// v(n) = v0 / (1 + exp((n - n0) / w)).
struct NfdModel {
  double v0 = 55.2;   // km/hr
  double n0 = 151.2;  // veh
  double w = 142.1;   // veh

  bool operator==(const NfdModel&) const = default;
};

double nfd_speed(const NfdModel& nfd, double accumulation);

struct MacroParams {
  NfdModel nfd;
  double v_on_f = 30.0;    // desired cruising speed on street, km/hr
  double v_off_f = 15.0;   // lot circuit speed, km/hr
  double l_m_on = 1.0;     // km
  double l_m_off = 0.9;
  double l_m_pass = 1.1;
  DistanceModel distance = DistanceModel::exp_distance(5.2e-11, 24.4);
  double N_on = 1139.0;
  double N_off = 100.0;
  double l_off = 0.3;      // km
  double dt_hr = 10.0 / 3600.0;
  double horizon_hr = 1.0;
  DurationDistribution duration = DurationDistribution::uniform(0.0, 1.0);
  double alpha_on = 0.0;
  double alpha_off = 0.0;
  double beta = 0.3;

  void validate() const;
  int steps() const;  // horizon / dt, rounded
};

/// Family accumulations plus the per-step flow histories the delayed and
/// convolution terms read. History vectors are 1-based in step number:
/// entry j-1 holds step j.
struct MacroState {
  double n_m_off = 0.0;
  double n_m_on = 0.0;
  double n_m_pass = 0.0;
  double n_c = 0.0;
  double n_off = 0.0;
  double n_on = 0.0;
  int k = 0;  // steps completed

  std::vector<double> o_c;        // cruisers parking on street
  std::vector<double> o_m_off;    // arrivals at the lot
  std::vector<double> q_off_on;   // lot arrivals turned away
  std::vector<double> q_out_off;  // lot re-departures

  double exited = 0.0;  // cumulative o_m_pass

  double active() const { return n_m_off + n_m_on + n_m_pass + n_c; }
  /// Vehicles turned away from the lot and still driving its circuit.
  double in_circuit(int k_off) const;
  /// Everything the state accounts for; conserved up to inflows.
  double total(int k_off) const;
};

/// Expected parking-arrival shares (on, off) from a binary logit.
struct DemandSplit {
  double on = 0.0;
  double off = 0.0;
};
DemandSplit split_demand(double parking_inflow, double fee_on, double fee_off,
                         const MacroParams& params);

struct Redepartures {
  double on = 0.0;
  double off = 0.0;
};

/// General form: cohort parked in step j leaves during step k with
/// probability F((k-j) dt) - F((k-j-1) dt).
Redepartures redeparture_flows(const MacroState& state, const DurationDistribution& duration,
                               int k, double dt_hr);
/// Shortcut valid for a uniform duration on [0, T] while every cohort is
/// younger than T: each step releases dt / T of everything parked so far.
Redepartures redeparture_flows_uniform(const MacroState& state, double max_duration_hr, int k,
                                       double dt_hr);

struct Outflows {
  double o_c = 0.0;
  double o_m_on = 0.0;
  double o_m_off = 0.0;
  double o_m_pass = 0.0;
  double speed = 0.0;      // v(n)
  double occupancy = 0.0;  // O_on
  double l_c = 0.0;        // expected distance to park
};

struct Inflows {
  double on = 0.0;
  double off = 0.0;
  double pass = 0.0;
};

/// Little's-formula outflows at step k from the state at t_{k-1}, before
/// the capacity caps. Throws ConsistencyError on a negative accumulation.
Outflows productions_and_outflows(const MacroState& state, const MacroParams& params);

/// Steps a vehicle turned away by the lot spends on its circuit:
/// nearest integer (ties up) of l_off / (v_off_f dt).
int circuit_delay_steps(const MacroParams& params);

/// Vehicles turned away by a full lot during step k.
double overflow(double o_m_off, double n_m_off_prev, double q_in_off, double n_off_prev,
                double q_out_off, double N_off);

/// One step of the six-family balance with all caps applied. Throws
/// ConsistencyError if conservation slips by more than 1e-9 relative.
MacroState macro_step(const MacroState& state, const Inflows& inflows, const MacroParams& params);

/// Per-step arrival forecasts in vehicles per step.
struct MacroDemand {
  std::vector<double> parkers;
  std::vector<double> passers;
};

/// Prices held for consecutive intervals of `interval_hr`; the last price
/// carries on if the run outlasts the schedule.
struct PriceProfile {
  double start_hr = 0.0;
  double interval_hr = 0.25;
  std::vector<double> on;
  std::vector<double> off;

  double on_at(double t_hr) const;
  double off_at(double t_hr) const;
};

struct MacroTrajectory {
  std::vector<double> t_hr;
  std::vector<double> n_m_on, n_m_off, n_m_pass, n_c, n_on, n_off;
  std::vector<double> n, v, occupancy;
  std::vector<double> o_c, q_off_on, q_out_on, q_out_off;
  std::vector<double> q_in_on, q_in_off;
  std::vector<double> conservation_residual;
};

/// Runs `steps` steps from `initial` (whose k sets the clock). Entry 0 of
/// every series is the initial state; flow series hold 0 there.
MacroTrajectory simulate_macro(const MacroDemand& demand, const PriceProfile& prices,
                               const MacroParams& params, const MacroState& initial, int steps);
MacroTrajectory simulate_macro(const MacroDemand& demand, const PriceProfile& prices,
                               const MacroParams& params);

/// macro_run.csv: t,n_m_on,n_m_off,n_m_pass,n_c,n_on,n_off,v,O_on,o_c,q_off_on,q_out_on,q_out_off
void write_macro_csv(const MacroTrajectory& traj, const std::filesystem::path& path);

}  // namespace parkdyn
