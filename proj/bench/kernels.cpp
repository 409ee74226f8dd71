// Serial reference vs OpenMP version of each parallel kernel. Run with
// OMP_NUM_THREADS set to the thread count under test.
#include <benchmark/benchmark.h>

#include <vector>

#include "parkdyn/bin_theory.hpp"
#include "parkdyn/estimators.hpp"
#include "parkdyn/mpc.hpp"
#include "parkdyn/replications.hpp"
#include "parkdyn/scenario.hpp"

using namespace parkdyn;

namespace {

std::vector<double> densities() {
  std::vector<double> Ks;
  for (int i = 1; i <= 1000; ++i) Ks.push_back(0.1 * i);
  return Ks;
}

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.grid.rows = cfg.grid.cols = 5;
  cfg.parkers.count = 300;
  cfg.passers.count = 100;
  return cfg;
}

OpenLoopProblem scarce_problem() {
  OpenLoopProblem pb;
  pb.params.N_on = 120;
  pb.params.N_off = 400;
  pb.params.duration = DurationDistribution::uniform(0.0, 1.0);
  pb.forecast = {std::vector<double>(360, 5.0), std::vector<double>(360, 2.0)};
  pb.steps = 180;
  pb.intervals = 2;
  pb.interval_hr = 0.25;
  return pb;
}

MpcConfig solver_config() {
  MpcConfig c;
  c.starts = 8;
  c.budget_per_start = 100;
  return c;
}

template <bool Parallel>
void BM_sweep_envelopes(benchmark::State& st) {
  const auto Ks = densities();
  const theory::BinParams p{50.0, 20.0, 100.0};
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? theory::sweep_envelopes(Ks, p, true, 0.01)
                                      : theory::sweep_envelopes_serial(Ks, p, true, 0.01));
}

template <bool Parallel>
void BM_monte_carlo_screening(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? monte_carlo_screening(0.8, 200000, 1)
                                      : monte_carlo_screening_serial(0.8, 200000, 1));
}

template <bool Parallel>
void BM_run_replications(benchmark::State& st) {
  const auto cfg = small_scenario();
  const auto net = make_network(cfg);
  const auto seeds = default_seeds(8);
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? run_replications(net, cfg, seeds)
                                      : run_replications_serial(net, cfg, seeds));
}

template <bool Parallel>
void BM_solve_open_loop(benchmark::State& st) {
  const auto pb = scarce_problem();
  const auto cfg = solver_config();
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? solve_open_loop(pb, cfg) : solve_open_loop_serial(pb, cfg));
}

}  // namespace

BENCHMARK(BM_sweep_envelopes<false>)->Name("sweep_envelopes/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_envelopes<true>)->Name("sweep_envelopes/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_screening<false>)->Name("monte_carlo_screening/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_screening<true>)->Name("monte_carlo_screening/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run_replications<false>)->Name("run_replications/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run_replications<true>)->Name("run_replications/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_solve_open_loop<false>)->Name("solve_open_loop/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_solve_open_loop<true>)->Name("solve_open_loop/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
