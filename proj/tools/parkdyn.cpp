#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parkdyn/bin_theory.hpp"
#include "parkdyn/calibration.hpp"
#include "parkdyn/error.hpp"
#include "parkdyn/estimators.hpp"
#include "parkdyn/macro_model.hpp"
#include "parkdyn/micro_measure.hpp"
#include "parkdyn/mpc.hpp"
#include "parkdyn/network_io.hpp"
#include "parkdyn/replications.hpp"
#include "parkdyn/scenario.hpp"

using namespace parkdyn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::string seeds = "10";
  std::string out = "out";
  int jobs = 0;
};

// "10" -> seeds 1..10; "3,7,11" -> exactly those.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  if (text.find(',') == std::string::npos) {
    const int n = std::stoi(text);
    if (n < 1) throw std::invalid_argument("--seeds needs at least one seed");
    return default_seeds(n);
  }
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(std::stoull(item));
  if (out.empty()) throw std::invalid_argument("--seeds needs at least one seed");
  return out;
}

ScenarioConfig load_config(const Globals& g) {
  if (g.config.empty()) return ScenarioConfig{};
  return load_scenario(g.config);
}

fs::path out_dir(const Globals& g) {
  fs::create_directories(g.out);
  return g.out;
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const PerformanceMetrics& m, const RunResult& r) {
  return {{"avg_travel_time_s", m.avg_travel_time_s},
          {"avg_delay_s", m.avg_delay_s},
          {"avg_speed_kmh", m.avg_speed},
          {"avg_distance_km", m.avg_distance_km},
          {"completion_rate", optional_json(m.completion_rate)},
          {"mean_distance_to_park_km", optional_json(m.mean_distance_to_park_km)},
          {"parked_vehicles", m.distance_to_park_km.size()},
          {"total_cruise_time_hr", m.total_cruise_time_hr},
          {"total_circuit_time_hr", m.total_circuit_time_hr},
          {"total_travel_time_hr", m.total_travel_time_hr},
          {"occupancy_window_s", m.occupancy_window_s},
          {"occupancy_series", m.occupancy_series},
          {"injected", r.summary.injected},
          {"exited", r.summary.exited},
          {"gridlock", r.summary.gridlock},
          {"conservation_ok", r.summary.conservation_ok}};
}

void write_nfd_csv(const std::vector<NfdPoint>& pts, const fs::path& path) {
  std::ofstream out(path);
  out << std::setprecision(10) << "t_s,K,Q,V\n";
  for (const auto& p : pts) out << p.t_s << ',' << p.density << ',' << p.flow << ',' << p.speed << '\n';
}

double mean_speed(const std::vector<RunResult>& runs) {
  double d = 0.0, t = 0.0;
  for (const auto& r : runs)
    for (const auto& s : r.trace) {
      d += s.distance_km;
      t += s.time_hr;
    }
  return t > 0.0 ? d / t : 0.0;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  int n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  return n ? s / n : std::nan("");
}

// ---- net ------------------------------------------------------------------

int cmd_net_build(const Globals& g, const std::string& file) {
  const auto cfg = load_config(g);
  const auto net = make_network(cfg);
  const fs::path path = file.empty() ? out_dir(g) / "network.json" : fs::path(file);
  save_network(net, path);
  std::printf("wrote %s: %zu nodes, %zu links, %d on-street spots, %zu lot(s)\n",
              path.string().c_str(), net.nodes().size(), net.links().size(),
              net.total_parking_capacity(), net.lots().size());
  return 0;
}

int cmd_net_check(const std::string& file) {
  const auto net = load_network(file);
  const bool connected = strongly_connected(net);
  std::printf("%s: %zu nodes, %zu links, %.3f km, %d on-street spots, %zu boundary nodes, %s\n",
              file.c_str(), net.nodes().size(), net.links().size(), net.total_length_km(),
              net.total_parking_capacity(), net.boundary_nodes().size(),
              connected ? "strongly connected" : "NOT strongly connected");
  return connected ? 0 : 1;
}

// ---- micro ----------------------------------------------------------------

int cmd_micro_run(const Globals& g, const std::string& sweep, double window_s) {
  const auto cfg = load_config(g);
  const auto seeds = parse_seeds(g.seeds);
  const auto dir = out_dir(g);

  if (sweep == "none") {
    const auto net = make_network(cfg);
    const auto runs = run_replications(net, cfg, seeds);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto sub = dir / ("seed_" + std::to_string(seeds[i]));
      fs::create_directories(sub);
      write_events_csv(runs[i].log, sub / "events.csv");
      write_nfd_csv(measure_nfd(travel_samples(runs[i].trace), runs[i].network_length_km, window_s),
                    sub / "nfd.csv");
      write_json(metrics_json(performance_metrics(runs[i], window_s), runs[i]), sub / "metrics.json");
      if (!runs[i].summary.conservation_ok)
        throw ConsistencyError("seed " + std::to_string(seeds[i]) + " lost vehicles");
    }
    std::printf("%zu replications, mean network speed %.2f km/h, output in %s\n", runs.size(),
                mean_speed(runs), dir.string().c_str());
    return 0;
  }

  if (sweep == "speed") {
    // demand levels scale both parker and passer counts
    std::ofstream csv(dir / "sweep_speed.csv");
    csv << "demand,v_c,mean_speed,peak_accumulation,cruise_share\n";
    const std::pair<const char*, double> levels[] = {{"low", 0.5}, {"medium", 1.0}, {"high", 1.5}};
    for (const auto& [name, scale] : levels)
      for (double vc : {10.0, 30.0, 50.0}) {
        auto c = cfg;
        c.parkers.count = int(std::lround(cfg.parkers.count * scale));
        c.passers.count = int(std::lround(cfg.passers.count * scale));
        c.cruise_speed = vc;
        const auto runs = run_replications(make_network(c), c, seeds);
        double peak = 0.0, cruise = 0.0, time = 0.0;
        for (const auto& r : runs) {
          for (const auto& p : measure_nfd(travel_samples(r.trace), r.network_length_km, window_s))
            peak = std::max(peak, p.accumulation);
          for (const auto& s : r.trace) {
            cruise += s.cruise_time_hr;
            time += s.time_hr;
          }
        }
        csv << name << ',' << vc << ',' << mean_speed(runs) << ',' << peak << ','
            << (time > 0 ? cruise / time : 0.0) << '\n';
        std::printf("%-6s v_c=%2.0f  mean speed %.2f km/h\n", name, vc, mean_speed(runs));
      }
    return 0;
  }

  if (sweep == "guidance") {
    std::ofstream csv(dir / "sweep_guidance.csv");
    csv << "guidance,compliance,mean_distance_to_park_km,completion_rate,avg_travel_time_s\n";
    const auto net = make_network(cfg);
    struct Mode {
      const char* name;
      bool local, regional;
    };
    for (const Mode m : {Mode{"none", false, false}, Mode{"local", true, false},
                         Mode{"regional", false, true}, Mode{"joint", true, true}}) {
      auto c = cfg;
      c.guidance.local_guidance = m.local;
      c.guidance.regional_guidance = m.regional;
      std::vector<double> dist, comp, travel;
      for (const auto& r : run_replications(net, c, seeds)) {
        const auto pm = performance_metrics(r, window_s);
        dist.push_back(pm.mean_distance_to_park_km.value_or(std::nan("")));
        comp.push_back(pm.completion_rate.value_or(std::nan("")));
        travel.push_back(pm.avg_travel_time_s);
      }
      csv << m.name << ',' << c.guidance.compliance << ',' << mean_of(dist) << ','
          << mean_of(comp) << ',' << mean_of(travel) << '\n';
      std::printf("%-8s distance to park %.3f km, completion %.3f\n", m.name, mean_of(dist),
                  mean_of(comp));
    }
    return 0;
  }
  throw std::invalid_argument("unknown sweep '" + sweep + "' (none, speed, guidance)");
}

// ---- theory ---------------------------------------------------------------

int cmd_theory_sweep(const Globals& g, double vf, double kj, std::vector<double> vcs, double step,
                     double grid) {
  const auto dir = out_dir(g);
  std::vector<double> Ks;
  for (long i = 1; i * step <= kj + 1e-9; ++i) Ks.push_back(i * step);
  std::ofstream csv(dir / "envelopes.csv");
  csv << std::setprecision(10)
      << "v_c,K,v_max,v_min,brute_v_max,brute_v_min,no_cruise_v_max,no_cruise_v_min\n";
  bool ok = true;
  for (double vc : vcs) {
    const theory::BinParams p{vf, vc, kj};
    double worst = 0.0, jump = 0.0;
    for (const auto& row : theory::sweep_envelopes(Ks, p, true, grid)) {
      const auto nc = theory::envelope_no_cruising(row.K, p);
      csv << vc << ',' << row.K << ',' << row.formula.v_max << ',' << row.formula.v_min << ','
          << row.brute.v_max << ',' << row.brute.v_min << ',' << nc.v_max << ',' << nc.v_min << '\n';
      worst = std::max({worst, std::abs(row.formula.v_max - row.brute.v_max),
                        std::abs(row.formula.v_min - row.brute.v_min)});
    }
    for (double b : theory::branch_points(p, true)) {
      if (b <= 0.0 || b >= kj) continue;
      const auto l = theory::envelope_with_cruising(b - 1e-11, p);
      const auto r = theory::envelope_with_cruising(b + 1e-11, p);
      jump = std::max({jump, std::abs(l.v_max - r.v_max), std::abs(l.v_min - r.v_min)});
    }
    const bool good = worst <= 0.05 && jump <= 1e-9;
    ok = ok && good;
    std::printf("v_c=%5.1f  k_c=%6.2f  unstable area %8.2f  max|formula-brute| %.4f  branch jump "
                "%.1e  %s\n",
                vc, theory::critical_density(p), theory::unstable_area(p, true), worst, jump,
                good ? "ok" : "MISMATCH");
  }
  return ok ? 0 : 1;
}

// ---- estimators -----------------------------------------------------------

int cmd_estimators_fit(const Globals& g, const std::string& input, const std::string& kind,
                       std::optional<double> screening, long trials) {
  if (screening) {
    const double mean = monte_carlo_screening(*screening, trials, 1);
    std::printf("O=%.4f  mean spots screened %.5f  (1/(1-O) = %.5f)\n", *screening, mean,
                1.0 / (1.0 - *screening));
    if (input.empty()) return 0;
  }
  if (input.empty()) throw std::invalid_argument("--input is required for a fit");
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot read " + input);
  std::vector<std::pair<double, double>> obs;
  std::string line;
  std::getline(in, line);  // header: occupancy,value
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(input + ": expected two columns");
    obs.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  const auto r = fit(obs, kind_from_name(kind));
  const json doc{{"kind", kind_name(r.model.kind)},
                 {"a", r.model.a},
                 {"b", r.model.b},
                 {"c", r.model.c},
                 {"d_p", r.model.d_p},
                 {"d_np", r.model.d_np},
                 {"d", r.model.d},
                 {"m", r.model.m},
                 {"rmse", r.rmse},
                 {"r_squared", r.r_squared},
                 {"observations", obs.size()}};
  write_json(doc, out_dir(g) / "estimator_fit.json");
  std::cout << doc.dump(2) << '\n';
  return 0;
}

// ---- macro / calibration --------------------------------------------------

CalibrationReport load_calibration(const std::string& file) {
  if (file.empty()) throw std::invalid_argument("a calibration file is required (--calibration)");
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read calibration file " + file);
  return calibration_from_json(json::parse(in));
}

MacroParams scenario_params(const ScenarioConfig& cfg, const Network& net,
                            const std::string& calibration, double dt_s) {
  MacroParams p = macro_params_for(cfg, net, MacroParams{});
  if (!calibration.empty()) p = apply_calibration(p, load_calibration(calibration));
  p.dt_hr = dt_s / 3600.0;
  return p;
}

// Captive spots are occupied for the whole run and start the macro model off.
MacroState scenario_initial_state(const ScenarioConfig& cfg) {
  MacroState s;
  s.n_on = cfg.captive_spots;
  return s;
}

int cmd_macro_run(const Globals& g, const std::string& calibration, double dt_s, double fee_on,
                  double fee_off) {
  const auto cfg = load_config(g);
  const auto net = make_network(cfg);
  const auto p = scenario_params(cfg, net, calibration, dt_s);
  PriceProfile prices{0.0, cfg.horizon_hr, {fee_on}, {fee_off}};
  const auto tr = simulate_macro(forecast_demand(cfg, p.dt_hr, p.steps()), prices, p,
                                 scenario_initial_state(cfg), p.steps());
  write_macro_csv(tr, out_dir(g) / "macro_run.csv");
  std::printf("%d steps, peak n_on %.1f, peak n_off %.1f, peak n_c %.1f\n", p.steps(),
              *std::max_element(tr.n_on.begin(), tr.n_on.end()),
              *std::max_element(tr.n_off.begin(), tr.n_off.end()),
              *std::max_element(tr.n_c.begin(), tr.n_c.end()));
  return 0;
}

TrendFilter parse_filter(const std::string& s) {
  if (s == "increasing") return TrendFilter::Increasing;
  if (s == "decreasing") return TrendFilter::Decreasing;
  if (s == "both") return TrendFilter::Both;
  throw std::invalid_argument("unknown filter '" + s + "'");
}

int cmd_calibrate(const Globals& g, const std::string& filter, const std::string& ref,
                  double window_s) {
  const auto cfg = load_config(g);
  const auto runs = run_replications(make_network(cfg), cfg, parse_seeds(g.seeds));
  CalibrationOptions opt;
  opt.filter = parse_filter(filter);
  if (ref != "init" && ref != "avg") throw std::invalid_argument("--ref must be init or avg");
  opt.ref = ref == "init" ? OccupancyRef::Init : OccupancyRef::Avg;
  opt.nfd_window_s = window_s;
  const auto report = calibrate(runs, opt);
  const auto path = out_dir(g) / "calibration.json";
  write_json(calibration_to_json(report), path);
  std::printf("NFD v0=%.2f n0=%.1f w=%.1f | l_m on %.3f off %.3f pass %.3f km | L(O)=%.3g exp(%.3g O)"
              " | wrote %s\n",
              report.nfd.model.v0, report.nfd.model.n0, report.nfd.model.w,
              report.distances.on.mean_km.value_or(std::nan("")),
              report.distances.off.mean_km.value_or(std::nan("")),
              report.distances.pass.mean_km.value_or(std::nan("")), report.distance_fit.model.a,
              report.distance_fit.model.b, path.string().c_str());
  if (report.nfd.model.n0 < 0.0)
    std::printf("note: samples never leave the free-flow tail, so the NFD fit is an exponential "
                "decay over the sampled range; do not read v0 as a speed\n");
  return 0;
}

json errors_json(const TrajectoryErrors& e) {
  return {{"peak_relative_error", e.peak_relative_error},
          {"rmse", e.rmse},
          {"envelope_fraction", e.envelope_fraction},
          {"steps", e.steps}};
}

int cmd_validate(const Globals& g, const std::string& calibration, double dt_s) {
  const auto cfg = load_config(g);
  const auto net = make_network(cfg);
  const auto p = scenario_params(cfg, net, calibration, dt_s);
  const auto runs = run_replications(net, cfg, parse_seeds(g.seeds));
  const auto tr = simulate_macro(forecast_demand(cfg, p.dt_hr, p.steps()), {}, p,
                                 scenario_initial_state(cfg), p.steps());
  std::vector<MicroSeries> micro;
  for (const auto& r : runs) micro.push_back(sample_micro(r, p.dt_hr));
  const auto v = validate(tr, micro);
  const auto dir = out_dir(g);
  write_macro_csv(tr, dir / "macro_run.csv");
  write_json({{"n_on", errors_json(v.n_on)},
              {"n_off", errors_json(v.n_off)},
              {"n", errors_json(v.n)},
              {"v", errors_json(v.v)}},
             dir / "validation.json");
  std::printf("peak relative error: n_on %.3f  n_off %.3f  n %.3f  v %.3f | v inside micro "
              "envelope %.2f\n",
              v.n_on.peak_relative_error, v.n_off.peak_relative_error, v.n.peak_relative_error,
              v.v.peak_relative_error, v.v.envelope_fraction);
  return 0;
}

// ---- mpc / compare --------------------------------------------------------

struct MpcOptions {
  std::string calibration;
  int starts = 8;
  int budget = 400;
  bool control_off = false;
  std::string objective = "cruising";
};

MpcConfig mpc_config(const MpcOptions& o) {
  MpcConfig c;
  c.starts = o.starts;
  c.budget_per_start = o.budget;
  c.control_off = o.control_off;
  if (o.objective == "cruising") c.objective = Objective::IneffectiveCruising;
  else if (o.objective == "travel") c.objective = Objective::TotalTravelTime;
  else throw std::invalid_argument("--objective must be cruising or travel");
  c.validate();
  return c;
}

int cmd_mpc_run(const Globals& g, const MpcOptions& o) {
  const auto cfg = load_config(g);
  const auto net = make_network(cfg);
  const auto mpc = mpc_config(o);
  const auto p = scenario_params(cfg, net, o.calibration, mpc.macro_dt_s);
  // forecast past the horizon so the last predictions are covered
  const auto forecast =
      forecast_demand(cfg, p.dt_hr, int(std::lround(2.0 * cfg.horizon_hr / p.dt_hr)));
  const auto dir = out_dir(g);
  for (auto seed : parse_seeds(g.seeds)) {
    auto c = cfg;
    c.seed = seed;
    MicroPlant plant(net, c);
    const auto log = mpc_loop(plant, p, forecast, mpc, cfg.horizon_hr, cfg.fee_on, cfg.fee_off);
    const auto sub = dir / ("seed_" + std::to_string(seed));
    fs::create_directories(sub);
    write_mpc_log_csv(log, sub / "mpc_log.csv");
    for (const auto& it : log.iterations)
      write_prediction_csv(it, sub / ("prediction_vs_plant_" + std::to_string(it.iteration) + ".csv"));
    std::printf("seed %llu: ineffective cruising %.3f veh-h, prices", (unsigned long long)seed,
                log.ineffective_time_hr());
    for (const auto& it : log.iterations) std::printf(" %.2f", it.applied_on);
    std::printf("%s\n", log.aborted ? (" (aborted: " + log.abort_reason + ")").c_str() : "");
    if (log.aborted) return 1;
  }
  return 0;
}

int cmd_compare(const Globals& g, const MpcOptions& o, std::vector<std::string> modes) {
  const auto cfg = load_config(g);
  const auto net = make_network(cfg);
  const auto mpc = mpc_config(o);
  const auto p = scenario_params(cfg, net, o.calibration, mpc.macro_dt_s);
  const auto seeds = parse_seeds(g.seeds);
  for (const auto& m : modes)
    if (m != "no-price" && m != "mpc" && m != "dynamic" && m != "static")
      throw std::invalid_argument("unknown mode '" + m + "'");

  const int intervals = int(std::lround(cfg.horizon_hr / mpc.control_interval_hr));
  MacroParams full = p;
  full.horizon_hr = cfg.horizon_hr;
  const auto demand = forecast_demand(cfg, p.dt_hr, full.steps());
  const auto forecast =
      forecast_demand(cfg, p.dt_hr, int(std::lround(2.0 * cfg.horizon_hr / p.dt_hr)));
  std::map<std::string, PricingSchedule> fixed;
  for (const auto& m : modes) {
    if (m != "dynamic" && m != "static") continue;
    const auto mode = m == "dynamic" ? FullHorizonMode::Dynamic : FullHorizonMode::Static;
    fixed[m] = solve_full_horizon(demand, full, mpc, mode, intervals, cfg.fee_on, cfg.fee_off,
                                  scenario_initial_state(cfg))
                   .schedule;
  }

  const auto dir = out_dir(g);
  std::ofstream csv(dir / "compare.csv");
  csv << std::setprecision(10)
      << "mode,seed,cruise_hr,circuit_hr,ineffective_hr,travel_hr,prices_on\n";
  std::map<std::string, std::vector<double>> ineffective;
  for (const auto& m : modes) {
    for (auto seed : seeds) {
      auto c = cfg;
      c.seed = seed;
      MicroPlant plant(net, c);
      MpcRunLog log;
      if (m == "no-price") {
        PricingSchedule none;
        none.interval_hr = mpc.control_interval_hr;
        log = run_open_loop(plant, none, cfg.horizon_hr, cfg.fee_on, cfg.fee_off, mpc);
      } else if (m == "mpc") {
        log = mpc_loop(plant, p, forecast, mpc, cfg.horizon_hr, cfg.fee_on, cfg.fee_off);
      } else {
        log = run_open_loop(plant, fixed[m], cfg.horizon_hr, cfg.fee_on, cfg.fee_off, mpc);
      }
      std::string prices;
      for (const auto& it : log.iterations) {
        std::ostringstream ss;
        ss << std::setprecision(6) << it.applied_on;
        prices += (prices.empty() ? "" : ";") + ss.str();
      }
      csv << m << ',' << seed << ',' << log.cruise_time_hr << ',' << log.circuit_time_hr << ','
          << log.ineffective_time_hr() << ',' << log.travel_time_hr << ',' << prices << '\n';
      ineffective[m].push_back(log.ineffective_time_hr());
    }
  }
  json summary;
  for (const auto& m : modes) {
    summary[m] = {{"mean_ineffective_hr", mean_of(ineffective[m])}, {"seeds", seeds.size()}};
    std::printf("%-9s mean ineffective cruising %.3f veh-h\n", m.c_str(), mean_of(ineffective[m]));
  }
  write_json(summary, dir / "compare_summary.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parking dynamics toolkit: micro simulation, bin theory, macro model, calibration "
               "and pricing control"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Scenario JSON file")->check(CLI::ExistingFile);
  app.add_option("--seeds", g.seeds, "Seed count (1..N) or comma-separated seed list")
      ->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "OpenMP threads (0 = runtime default)")->capture_default_str();

  int status = 0;
  auto guard = [&status, &g](auto fn) {
    return [&status, &g, fn]() {
      set_jobs(g.jobs);
      status = fn();
    };
  };

  auto* net = app.add_subcommand("net", "Build or check networks");
  net->require_subcommand(1);
  std::string net_file;
  auto* net_build = net->add_subcommand("build", "Write the scenario network as JSON");
  net_build->add_option("--file", net_file, "Output path (default <out>/network.json)");
  net_build->callback(guard([&] { return cmd_net_build(g, net_file); }));
  std::string check_file;
  auto* net_check = net->add_subcommand("check", "Load and validate a network file");
  net_check->add_option("file", check_file, "Network JSON")->required();
  net_check->callback(guard([&] { return cmd_net_check(check_file); }));

  auto* micro = app.add_subcommand("micro", "Micro simulation");
  micro->require_subcommand(1);
  std::string sweep = "none";
  double window_s = 60.0;
  auto* micro_run = micro->add_subcommand("run", "Run replications of the scenario");
  micro_run->add_option("--sweep", sweep, "none | speed | guidance")->capture_default_str();
  micro_run->add_option("--window", window_s, "NFD window, s")->capture_default_str();
  micro_run->callback(guard([&] { return cmd_micro_run(g, sweep, window_s); }));

  auto* theory = app.add_subcommand("theory", "Two-bin envelope theory");
  theory->require_subcommand(1);
  double vf = 50.0, kj = 100.0, step = 0.1, grid = 0.01;
  std::vector<double> vcs{10.0, 20.0, 30.0, 40.0};
  auto* sweep_cmd = theory->add_subcommand("sweep", "Envelopes over a density grid");
  sweep_cmd->add_option("--vf", vf, "Free-flow speed, km/h")->capture_default_str();
  sweep_cmd->add_option("--kj", kj, "Jam density, veh/km")->capture_default_str();
  sweep_cmd->add_option("--vc", vcs, "Cruising speeds, km/h")->capture_default_str();
  sweep_cmd->add_option("--step", step, "Density step, veh/km")->capture_default_str();
  sweep_cmd->add_option("--grid", grid, "Brute-force split step, veh/km")->capture_default_str();
  sweep_cmd->callback(guard([&] { return cmd_theory_sweep(g, vf, kj, vcs, step, grid); }));

  auto* est = app.add_subcommand("estimators", "Occupancy-based search estimators");
  est->require_subcommand(1);
  std::string est_input, est_kind = "exp-distance";
  std::optional<double> screening;
  long trials = 100000;
  auto* est_fit = est->add_subcommand("fit", "Fit an estimator to occupancy,value rows");
  est_fit->add_option("--input", est_input, "CSV with a header and occupancy,value rows");
  est_fit->add_option("--kind", est_kind,
                      "exp-time | hyperbolic-time | geometric | modified-geometric | exp-distance")
      ->capture_default_str();
  est_fit->add_option("--screening", screening, "Also run the screening simulation at this occupancy");
  est_fit->add_option("--trials", trials, "Screening trials")->capture_default_str();
  est_fit->callback(guard([&] { return cmd_estimators_fit(g, est_input, est_kind, screening, trials); }));

  auto* macro = app.add_subcommand("macro", "Accumulation-based macro model");
  macro->require_subcommand(1);
  std::string calibration;
  double dt_s = 10.0, fee_on = 0.0, fee_off = 0.0;
  auto* macro_run = macro->add_subcommand("run", "Simulate the scenario's expected demand");
  macro_run->add_option("--calibration", calibration, "calibration.json to apply");
  macro_run->add_option("--dt", dt_s, "Step, s")->capture_default_str();
  macro_run->add_option("--fee-on", fee_on, "On-street price, $")->capture_default_str();
  macro_run->add_option("--fee-off", fee_off, "Lot price, $")->capture_default_str();
  macro_run->callback(guard([&] { return cmd_macro_run(g, calibration, dt_s, fee_on, fee_off); }));

  std::string filter = "increasing", ref = "init";
  auto* cal = app.add_subcommand("calibrate", "Calibrate the macro model from micro replications");
  cal->add_option("--filter", filter, "increasing | decreasing | both")->capture_default_str();
  cal->add_option("--ref", ref, "init | avg")->capture_default_str();
  cal->add_option("--window", window_s, "NFD window, s")->capture_default_str();
  cal->callback(guard([&] { return cmd_calibrate(g, filter, ref, window_s); }));

  auto* val = app.add_subcommand("validate", "Compare the macro model with micro replications");
  val->add_option("--calibration", calibration, "calibration.json to apply");
  val->add_option("--dt", dt_s, "Macro step, s")->capture_default_str();
  val->callback(guard([&] { return cmd_validate(g, calibration, dt_s); }));

  MpcOptions mo;
  auto add_mpc_options = [&mo](CLI::App* cmd) {
    cmd->add_option("--calibration", mo.calibration, "calibration.json")->required();
    cmd->add_option("--starts", mo.starts, "Optimizer starts")->capture_default_str();
    cmd->add_option("--budget", mo.budget, "Evaluations per start")->capture_default_str();
    cmd->add_flag("--control-off", mo.control_off, "Also price the lot");
    cmd->add_option("--objective", mo.objective, "cruising | travel")->capture_default_str();
  };
  auto* mpc = app.add_subcommand("mpc", "Model predictive pricing");
  mpc->require_subcommand(1);
  auto* mpc_run = mpc->add_subcommand("run", "Closed-loop pricing on the micro plant");
  add_mpc_options(mpc_run);
  mpc_run->callback(guard([&] { return cmd_mpc_run(g, mo); }));

  std::vector<std::string> modes{"no-price", "mpc", "dynamic", "static"};
  auto* cmp = app.add_subcommand("compare", "Pricing modes on identical seeds");
  add_mpc_options(cmp);
  cmp->add_option("--modes", modes, "no-price mpc dynamic static")->capture_default_str();
  cmp->callback(guard([&] { return cmd_compare(g, mo, modes); }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return status;
}
