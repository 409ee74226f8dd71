#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "parkdyn/mpc.hpp"

using namespace parkdyn;

namespace {

MacroParams scarce_params() {
  MacroParams p;
  p.N_on = 120;
  p.N_off = 400;
  p.duration = DurationDistribution::uniform(0.0, 1.0);
  p.horizon_hr = 1.0;
  return p;
}

MacroDemand steady(int steps, double parkers, double passers) {
  return {std::vector<double>(std::size_t(steps), parkers),
          std::vector<double>(std::size_t(steps), passers)};
}

MpcConfig quick_config() {
  MpcConfig c;
  c.starts = 4;
  c.budget_per_start = 120;
  return c;
}

OpenLoopProblem scarce_problem() {
  OpenLoopProblem pb;
  pb.params = scarce_params();
  pb.forecast = steady(360, 5.0, 2.0);
  pb.steps = 180;
  pb.intervals = 2;
  pb.interval_hr = 0.25;
  return pb;
}

}  // namespace

TEST_SUITE("mpc") {

TEST_CASE("objective examples") {
  MacroParams p;
  p.dt_hr = 10.0 / 3600.0;
  MacroTrajectory empty;
  empty.n_c.assign(181, 0.0);
  empty.q_off_on.assign(181, 0.0);
  empty.n.assign(181, 0.0);
  CHECK(objective_ineffective_cruising(empty, p) == 0.0);

  MacroTrajectory cruising = empty;
  std::fill(cruising.n_c.begin(), cruising.n_c.end(), 10.0);
  CHECK(objective_ineffective_cruising(cruising, p) == doctest::Approx(5.0).epsilon(1e-12));

  MacroTrajectory spill = empty;
  spill.q_off_on[1] = 1.0;
  p.l_off = 0.3;
  p.v_off_f = 15.0;
  CHECK(objective_ineffective_cruising(spill, p) == doctest::Approx(0.02).epsilon(1e-12));

  MacroTrajectory moving = spill;
  std::fill(moving.n.begin(), moving.n.end(), 4.0);
  CHECK(objective_total_travel_time(moving, p) == doctest::Approx(2.0 + 0.02).epsilon(1e-12));
}

TEST_CASE("zero demand leaves the optimiser indifferent") {
  OpenLoopProblem pb = scarce_problem();
  pb.forecast = steady(360, 0.0, 0.0);
  const auto r = solve_open_loop(pb, quick_config());
  CHECK(r.objective == 0.0);
  CHECK(r.indifferent);
  CHECK(r.schedule.feasible());
}

TEST_CASE("scarce street space prices parkers off street at first") {
  const auto pb = scarce_problem();
  const auto r = solve_open_loop(pb, quick_config());
  REQUIRE(r.schedule.on.size() == 2);
  CHECK(r.schedule.on[0] > 0.0);
  CHECK(r.schedule.off.empty());
  const std::vector<double> free{0.0, 0.0}, none;
  CHECK(r.objective < evaluate_schedule(pb, quick_config(), free, none));
  CHECK_FALSE(r.indifferent);
}

TEST_CASE("best-so-far trace never increases") {
  const auto r = solve_open_loop(scarce_problem(), quick_config());
  REQUIRE(!r.best_trace.empty());
  CHECK(int(r.best_trace.size()) == r.evaluations);
  for (std::size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
  CHECK(r.best_trace.back() == r.objective);
}

TEST_CASE("parallel solve equals the serial reference") {
  auto cfg = quick_config();
  cfg.control_off = true;
  const auto pb = scarce_problem();
  const auto a = solve_open_loop(pb, cfg);
  const auto b = solve_open_loop_serial(pb, cfg);
  CHECK(a.objective == b.objective);
  CHECK(a.schedule.on == b.schedule.on);
  CHECK(a.schedule.off == b.schedule.off);
  CHECK(a.best_trace == b.best_trace);
}

TEST_CASE("evaluation is deterministic") {
  const auto pb = scarce_problem();
  const std::vector<double> on{4.0, 6.0}, off;
  CHECK(evaluate_schedule(pb, quick_config(), on, off) ==
        evaluate_schedule(pb, quick_config(), on, off));
}

TEST_CASE("property: repaired prices are always feasible") {
  testing::Gen g(55);
  for (int i = 0; i < 2000; ++i) {
    PriceBounds b{g.uniform(0, 3), 0.0, g.uniform(0, 4)};
    b.max = b.min + g.uniform(0, 10);
    const auto raw = g.vector(std::size_t(g.integer(1, 6)), -5, 20);
    const std::optional<double> prior =
        g.coin(0.5) ? std::optional<double>(g.uniform(b.min, b.max)) : std::nullopt;
    PricingSchedule s;
    s.bounds = b;
    s.on = repair_prices(raw, b, prior);
    CHECK(s.feasible(prior, std::nullopt, 1e-12));
  }
}

TEST_CASE("property: solved schedules respect bounds and the gap") {
  testing::Gen g(66);
  auto cfg = quick_config();
  cfg.budget_per_start = 40;
  cfg.control_off = true;
  for (int i = 0; i < 6; ++i) {
    auto pb = scarce_problem();
    pb.forecast = steady(360, g.uniform(1, 8), g.uniform(0, 4));
    pb.prior_on = g.uniform(0, 10);
    pb.prior_off = g.uniform(0, 10);
    const auto r = solve_open_loop(pb, cfg);
    CHECK(r.schedule.feasible(pb.prior_on, pb.prior_off));
    for (double x : r.schedule.on) CHECK((x >= 0.0 && x <= 10.0));
  }
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS((PriceBounds{5, 1, 3}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PriceBounds{0, 10, -1}.validate()), std::invalid_argument);
  auto cfg = quick_config();
  cfg.bounds.gap = -1;
  CHECK_THROWS_AS(solve_open_loop(scarce_problem(), cfg), std::invalid_argument);
  cfg = quick_config();
  cfg.prediction_horizon_hr = 0.75;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quick_config();
  cfg.macro_dt_s = 7.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quick_config();
  cfg.control_on = false;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("one hour in quarter-hour intervals takes four solves") {
  const auto p = scarce_params();
  const auto demand = steady(360, 5.0, 2.0);
  MacroPlant plant(p, demand);
  const auto log = mpc_loop(plant, p, demand, quick_config(), 1.0);
  CHECK_FALSE(log.aborted);
  CHECK(log.iterations.size() == 4);
  for (std::size_t i = 0; i < log.iterations.size(); ++i)
    CHECK(log.iterations[i].t_hr == doctest::Approx(0.25 * i));
}

TEST_CASE("perfect-model plant realises the predictions") {
  const auto p = scarce_params();
  const auto demand = steady(360, 5.0, 2.0);
  MacroPlant plant(p, demand);
  const auto log = mpc_loop(plant, p, demand, quick_config(), 1.0);
  for (const auto& it : log.iterations) {
    REQUIRE(it.pred_n_c.size() == it.real_n_c.size());
    for (std::size_t k = 0; k < it.pred_n_c.size(); ++k) {
      CHECK(it.pred_n_c[k] == doctest::Approx(it.real_n_c[k]).epsilon(1e-9));
      CHECK(it.pred_n_on[k] == doctest::Approx(it.real_n_on[k]).epsilon(1e-9));
    }
  }

  // Replaying the applied prices open loop gives the same cost.
  PricingSchedule applied;
  for (const auto& it : log.iterations) applied.on.push_back(it.applied_on);
  MacroPlant replay(p, demand);
  const auto open = run_open_loop(replay, applied, 1.0, 0.0, 0.0, quick_config());
  CHECK(open.ineffective_time_hr() == doctest::Approx(log.ineffective_time_hr()).epsilon(1e-9));

  // and control never loses to leaving prices at zero
  MacroPlant baseline(p, demand);
  const auto none = run_open_loop(baseline, PricingSchedule{}, 1.0, 0.0, 0.0, quick_config());
  CHECK(log.ineffective_time_hr() <= none.ineffective_time_hr() + 1e-9);
}

TEST_CASE("full-horizon dynamic pricing is never worse than static") {
  const auto p = scarce_params();
  const auto demand = steady(360, 5.0, 2.0);
  const auto cfg = quick_config();
  const auto stat = solve_full_horizon(demand, p, cfg, FullHorizonMode::Static, 4);
  const auto dyn = solve_full_horizon(demand, p, cfg, FullHorizonMode::Dynamic, 4);
  REQUIRE(stat.schedule.on.size() == 4);
  for (double x : stat.schedule.on) CHECK(x == stat.schedule.on.front());
  REQUIRE(dyn.schedule.on.size() == 4);
  CHECK(dyn.objective <= stat.objective + 1e-12);
  CHECK(dyn.schedule.feasible());
}

TEST_CASE("snapshot to macro state") {
  MacroParams p;
  p.dt_hr = 10.0 / 3600.0;
  PlantSnapshot snap;
  snap.t_s = 100.0;
  snap.moving_on = 3;
  snap.moving_off = 1;
  snap.transit = 4;
  snap.cruising = 2;
  snap.parked_on = 7;
  snap.parked_off = 1;
  snap.on_park_times_s = {50.0};
  snap.off_park_times_s = {95.0};
  const auto s = macro_state_from_snapshot(snap, p);
  CHECK(s.k == 10);
  CHECK(s.n_m_on == 3);
  CHECK(s.n_m_off == 1);
  CHECK(s.n_m_pass == 4);
  CHECK(s.n_c == 2);
  CHECK(s.n_on == 7);
  CHECK(s.o_c.size() == 10);
  // parked 50 s ago: cohort 5, survival 1 - 50/3600
  CHECK(s.o_c[4] == doctest::Approx(1.0 / (1.0 - 50.0 / 3600.0)));
  CHECK(s.o_m_off[9] == doctest::Approx(1.0));

  PlantSnapshot early;
  early.on_park_times_s = {0.0};
  CHECK_THROWS_AS(macro_state_from_snapshot(early, p), std::invalid_argument);
}

TEST_CASE("known-demand forecast spreads the scenario counts") {
  ScenarioConfig cfg;
  cfg.parkers = {360, {1.0, 3.0}};
  cfg.passers = {36, {1.0}};
  const auto d = forecast_demand(cfg, 0.01, 100);
  CHECK(d.parkers[0] == doctest::Approx(360 * 0.25 * 0.02));
  CHECK(d.parkers[99] == doctest::Approx(360 * 0.75 * 0.02));
  CHECK(d.passers[10] == doctest::Approx(0.36));
  double total = 0;
  for (double x : d.parkers) total += x;
  CHECK(total == doctest::Approx(360.0));
}

TEST_CASE("log files") {
  const auto p = scarce_params();
  const auto demand = steady(360, 5.0, 2.0);
  MacroPlant plant(p, demand);
  auto cfg = quick_config();
  cfg.budget_per_start = 30;
  const auto log = mpc_loop(plant, p, demand, cfg, 0.5);
  const auto dir = std::filesystem::temp_directory_path();
  write_mpc_log_csv(log, dir / "parkdyn_test_mpc.csv");
  write_prediction_csv(log.iterations.front(), dir / "parkdyn_test_pred.csv");
  std::ifstream a(dir / "parkdyn_test_mpc.csv"), b(dir / "parkdyn_test_pred.csv");
  std::string h1, h2;
  std::getline(a, h1);
  std::getline(b, h2);
  CHECK(h1 == "iteration,t_hr,tau_on,tau_off,predicted_objective,plant_cruise_hr,plant_circuit_hr,plant_travel_hr");
  CHECK(h2 == "t_hr,pred_n_c,real_n_c,pred_n_on,real_n_on,pred_n_off,real_n_off,pred_n,real_n");
  std::filesystem::remove(dir / "parkdyn_test_mpc.csv");
  std::filesystem::remove(dir / "parkdyn_test_pred.csv");
}

}  // TEST_SUITE
