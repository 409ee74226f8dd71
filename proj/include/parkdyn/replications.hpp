#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "parkdyn/micro_sim.hpp"

namespace parkdyn {

/// One run per seed, otherwise identical scenarios. Runs are independent,
/// so the OpenMP version hands one seed to each thread; results are in
/// seed order and identical to the serial reference.
std::vector<RunResult> run_replications(const Network& net, const ScenarioConfig& cfg,
                                        std::span<const std::uint64_t> seeds);
std::vector<RunResult> run_replications_serial(const Network& net, const ScenarioConfig& cfg,
                                               std::span<const std::uint64_t> seeds);

/// Seeds 1..n.
std::vector<std::uint64_t> default_seeds(int n = 10);

/// Set the OpenMP thread count (0 leaves the runtime default).
void set_jobs(int jobs);

}  // namespace parkdyn
