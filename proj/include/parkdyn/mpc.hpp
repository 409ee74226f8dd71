#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parkdyn/macro_model.hpp"
#include "parkdyn/micro_sim.hpp"
#include "parkdyn/scenario.hpp"

namespace parkdyn {

enum class Facility { On, Off };

struct PriceBounds {
  double min = 0.0;   // $
  double max = 10.0;  // $
  double gap = 3.0;   // max change between consecutive intervals, $

  void validate() const;
};

/// Interval-indexed prices for the controlled facilities. Uncontrolled
/// facilities keep their fixed price in every interval.
struct PricingSchedule {
  double interval_hr = 0.25;
  std::vector<double> on;
  std::vector<double> off;
  PriceBounds bounds;

  /// Bounds and the gap rule (including the link to `prior`, when given).
  bool feasible(std::optional<double> prior_on = std::nullopt,
                std::optional<double> prior_off = std::nullopt, double tol = 0.0) const;
};

/// Clamp into the bounds, then walk forward pulling each price within `gap`
/// of its predecessor (the prior price for the first interval).
std::vector<double> repair_prices(std::vector<double> prices, const PriceBounds& bounds,
                                  std::optional<double> prior);

enum class Objective { IneffectiveCruising, TotalTravelTime };

struct MpcConfig {
  double prediction_horizon_hr = 0.5;
  double control_interval_hr = 0.25;
  int intervals = 2;
  double macro_dt_s = 10.0;
  int starts = 8;
  int budget_per_start = 400;
  bool control_on = true;
  bool control_off = false;
  PriceBounds bounds;
  Objective objective = Objective::IneffectiveCruising;
  std::uint64_t seed = 11;
  double min_step = 1e-3;  // $, pattern-search stopping step

  void validate() const;
};

/// Ineffective cruising cost over a trajectory: sum_k n_c(t_k) dt for the N
/// steps from the initial state, plus the circuit time l_off q_off_on(k+1) / v_off_f of
/// every vehicle turned away by the lot.
double objective_ineffective_cruising(const MacroTrajectory& traj, const MacroParams& params);
double objective_total_travel_time(const MacroTrajectory& traj, const MacroParams& params);

struct OpenLoopResult {
  PricingSchedule schedule;
  double objective = 0.0;
  bool indifferent = false;  // every evaluated schedule scored the same
  int evaluations = 0;
  std::vector<double> best_trace;  // best-so-far after each evaluation
};

struct OpenLoopProblem {
  MacroState state;       // clock at state.k
  MacroDemand forecast;   // absolute-step indexed, must cover the horizon
  MacroParams params;
  int steps = 0;          // prediction steps
  int intervals = 2;
  double interval_hr = 0.25;
  double fixed_on = 0.0;  // price of an uncontrolled facility
  double fixed_off = 0.0;
  std::optional<double> prior_on;
  std::optional<double> prior_off;
};

/// Multi-start compass search over the controlled prices; the objective is
/// simulate_macro over the prediction horizon. Starts: prior schedule,
/// bound corners, Latin-hypercube fill.
OpenLoopResult solve_open_loop(const OpenLoopProblem& problem, const MpcConfig& config);
OpenLoopResult solve_open_loop_serial(const OpenLoopProblem& problem, const MpcConfig& config);

double evaluate_schedule(const OpenLoopProblem& problem, const MpcConfig& config,
                         const std::vector<double>& on, const std::vector<double>& off);

/// Something prices can be applied to and advanced.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual double time_hr() const = 0;
  /// Current accumulations with cohort histories on the macro grid.
  virtual MacroState state(const MacroParams& params) const = 0;
  virtual void set_prices(double fee_on, double fee_off) = 0;
  virtual void advance(double hours) = 0;
  /// Ineffective cruising and on-road time accumulated so far (veh-hr).
  virtual double cruise_time_hr() const = 0;
  virtual double circuit_time_hr() const = 0;
  virtual double travel_time_hr() const = 0;
};

/// The macro model stepping on its own demand: the perfect-model plant.
class MacroPlant : public Plant {
 public:
  MacroPlant(MacroParams params, MacroDemand demand, MacroState initial = {});
  double time_hr() const override;
  MacroState state(const MacroParams& params) const override;
  void set_prices(double fee_on, double fee_off) override;
  void advance(double hours) override;
  double cruise_time_hr() const override { return cruise_hr_; }
  double circuit_time_hr() const override { return circuit_hr_; }
  double travel_time_hr() const override { return travel_hr_; }
  const MacroTrajectory& trajectory() const { return traj_; }

 private:
  MacroParams params_;
  MacroDemand demand_;
  MacroState state_;
  double fee_on_ = 0.0, fee_off_ = 0.0;
  double cruise_hr_ = 0.0, circuit_hr_ = 0.0, travel_hr_ = 0.0;
  MacroTrajectory traj_;
};

/// The micro simulator as plant.
class MicroPlant : public Plant {
 public:
  MicroPlant(Network net, ScenarioConfig cfg);
  double time_hr() const override;
  MacroState state(const MacroParams& params) const override;
  void set_prices(double fee_on, double fee_off) override;
  void advance(double hours) override;
  double cruise_time_hr() const override;
  double circuit_time_hr() const override;
  double travel_time_hr() const override;
  const Simulator& simulator() const { return sim_; }

 private:
  Simulator sim_;
};

/// Turns a plant snapshot into a macro state on the macro grid: family
/// counts map one to one, and still-parked vehicles become synthetic
/// cohorts scaled by 1 / survival so the expected future re-departures of
/// each cohort equal its remaining vehicles.
MacroState macro_state_from_snapshot(const PlantSnapshot& snap, const MacroParams& params);

/// Expected arrivals per macro step for a scenario (known-demand forecast).
MacroDemand forecast_demand(const ScenarioConfig& cfg, double dt_hr, int steps);

/// MacroParams carrying the scenario's physical constants (capacities,
/// lot, duration, logit) on top of `base`.
MacroParams macro_params_for(const ScenarioConfig& cfg, const Network& net, MacroParams base);

struct MpcIteration {
  int iteration = 0;
  double t_hr = 0.0;
  double applied_on = 0.0;
  double applied_off = 0.0;
  double predicted_objective = 0.0;
  PricingSchedule schedule;
  // prediction over the applied interval vs what the plant then did
  std::vector<double> t_pred_hr;
  std::vector<double> pred_n_c, pred_n_on, pred_n_off, pred_n;
  std::vector<double> real_n_c, real_n_on, real_n_off, real_n;
  double plant_cruise_hr = 0.0;
  double plant_circuit_hr = 0.0;
  double plant_travel_hr = 0.0;
};

struct MpcRunLog {
  std::vector<MpcIteration> iterations;
  bool aborted = false;
  std::string abort_reason;
  double cruise_time_hr = 0.0;
  double circuit_time_hr = 0.0;
  double ineffective_time_hr() const { return cruise_time_hr + circuit_time_hr; }
  double travel_time_hr = 0.0;
};

/// Rolling horizon: at each control boundary read the plant, solve, apply
/// the first interval, advance. Runs until `horizon_hr`.
MpcRunLog mpc_loop(Plant& plant, const MacroParams& params, const MacroDemand& forecast,
                   const MpcConfig& config, double horizon_hr, double fixed_on = 0.0,
                   double fixed_off = 0.0);

enum class FullHorizonMode { Dynamic, Static };

/// One optimisation over the whole horizon from `initial`: `intervals`
/// prices per facility (Dynamic) or a single one (Static). The dynamic
/// solve is seeded with the static optimum so it can only do better.
OpenLoopResult solve_full_horizon(const MacroDemand& demand, const MacroParams& params,
                                  const MpcConfig& config, FullHorizonMode mode, int intervals,
                                  double fixed_on = 0.0, double fixed_off = 0.0,
                                  const MacroState& initial = {});

/// Apply a fixed schedule to a plant, interval by interval.
MpcRunLog run_open_loop(Plant& plant, const PricingSchedule& schedule, double horizon_hr,
                        double fixed_on, double fixed_off, const MpcConfig& config);

void write_mpc_log_csv(const MpcRunLog& log, const std::filesystem::path& path);
void write_prediction_csv(const MpcIteration& it, const std::filesystem::path& path);

}  // namespace parkdyn
