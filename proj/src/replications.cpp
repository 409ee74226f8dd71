#include "parkdyn/replications.hpp"

#include <exception>

#include <omp.h>

namespace parkdyn {

std::vector<RunResult> run_replications(const Network& net, const ScenarioConfig& cfg,
                                        std::span<const std::uint64_t> seeds) {
  std::vector<RunResult> out(seeds.size());
  std::exception_ptr failure;
  const auto n = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      ScenarioConfig c = cfg;
      c.seed = seeds[i];
      out[i] = run_scenario(net, c);
    } catch (...) {
#pragma omp critical(parkdyn_replication_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<RunResult> run_replications_serial(const Network& net, const ScenarioConfig& cfg,
                                               std::span<const std::uint64_t> seeds) {
  std::vector<RunResult> out;
  out.reserve(seeds.size());
  for (auto s : seeds) {
    ScenarioConfig c = cfg;
    c.seed = s;
    out.push_back(run_scenario(net, c));
  }
  return out;
}

std::vector<std::uint64_t> default_seeds(int n) {
  std::vector<std::uint64_t> s(n);
  for (int i = 0; i < n; ++i) s[i] = std::uint64_t(i + 1);
  return s;
}

void set_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

}  // namespace parkdyn
