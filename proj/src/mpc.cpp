#include "parkdyn/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <stdexcept>

#include "parkdyn/error.hpp"

namespace parkdyn {

void PriceBounds::validate() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(gap))
    throw std::invalid_argument("price bounds must be finite");
  if (min > max) throw std::invalid_argument("price bounds: min > max");
  if (gap < 0.0) throw std::invalid_argument("price gap must be >= 0");
}

namespace {

bool prices_feasible(const std::vector<double>& p, const PriceBounds& b,
                     std::optional<double> prior, double tol) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < b.min - tol || p[i] > b.max + tol) return false;
    if (i > 0 && std::abs(p[i] - p[i - 1]) > b.gap + tol) return false;
  }
  if (prior && !p.empty() && std::abs(p.front() - *prior) > b.gap + tol) return false;
  return true;
}

}  // namespace

bool PricingSchedule::feasible(std::optional<double> prior_on, std::optional<double> prior_off,
                               double tol) const {
  return prices_feasible(on, bounds, prior_on, tol) && prices_feasible(off, bounds, prior_off, tol);
}

std::vector<double> repair_prices(std::vector<double> p, const PriceBounds& b,
                                  std::optional<double> prior) {
  b.validate();
  std::optional<double> prev;
  if (prior) prev = std::clamp(*prior, b.min, b.max);
  for (double& x : p) {
    if (!std::isfinite(x)) x = prev.value_or(b.min);
    x = std::clamp(x, b.min, b.max);
    if (prev) x = std::clamp(x, *prev - b.gap, *prev + b.gap);
    prev = x;
  }
  return p;
}

void MpcConfig::validate() const {
  bounds.validate();
  if (!(control_interval_hr > 0.0)) throw std::invalid_argument("control interval must be > 0");
  if (intervals < 1) throw std::invalid_argument("intervals must be >= 1");
  if (std::abs(prediction_horizon_hr - intervals * control_interval_hr) > 1e-9)
    throw std::invalid_argument("prediction horizon must equal intervals x control interval");
  if (!(macro_dt_s > 0.0)) throw std::invalid_argument("macro step must be > 0");
  const double ratio = control_interval_hr * 3600.0 / macro_dt_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw std::invalid_argument("macro step must divide the control interval");
  if (starts < 1 || budget_per_start < 1)
    throw std::invalid_argument("optimizer needs at least one start and one evaluation");
  if (!control_on && !control_off) throw std::invalid_argument("no facility under control");
  if (!(min_step > 0.0)) throw std::invalid_argument("min step must be > 0");
}

double objective_ineffective_cruising(const MacroTrajectory& tr, const MacroParams& p) {
  double cost = 0.0;
  const std::size_t n = tr.n_c.size();
  for (std::size_t k = 0; k + 1 < n; ++k) cost += tr.n_c[k] * p.dt_hr;
  for (std::size_t k = 1; k < tr.q_off_on.size(); ++k)
    cost += p.l_off * tr.q_off_on[k] / p.v_off_f;
  return cost;
}

double objective_total_travel_time(const MacroTrajectory& tr, const MacroParams& p) {
  double cost = 0.0;
  const std::size_t n = tr.n.size();
  for (std::size_t k = 0; k + 1 < n; ++k) cost += tr.n[k] * p.dt_hr;
  for (std::size_t k = 1; k < tr.q_off_on.size(); ++k)
    cost += p.l_off * tr.q_off_on[k] / p.v_off_f;
  return cost;
}

namespace {

struct Decoder {
  const OpenLoopProblem& pb;
  const MpcConfig& cfg;

  int dims() const { return pb.intervals * (int(cfg.control_on) + int(cfg.control_off)); }

  // Decision vector layout: on prices, then off prices.
  std::pair<std::vector<double>, std::vector<double>> split(const std::vector<double>& x) const {
    std::vector<double> on(pb.intervals, pb.fixed_on), off(pb.intervals, pb.fixed_off);
    std::size_t i = 0;
    if (cfg.control_on)
      for (int j = 0; j < pb.intervals; ++j) on[j] = x[i++];
    if (cfg.control_off)
      for (int j = 0; j < pb.intervals; ++j) off[j] = x[i++];
    return {on, off};
  }

  std::vector<double> repair(const std::vector<double>& x) const {
    auto [on, off] = split(x);
    std::vector<double> out;
    if (cfg.control_on) {
      on = repair_prices(on, cfg.bounds, pb.prior_on);
      out.insert(out.end(), on.begin(), on.end());
    }
    if (cfg.control_off) {
      off = repair_prices(off, cfg.bounds, pb.prior_off);
      out.insert(out.end(), off.begin(), off.end());
    }
    return out;
  }

  double evaluate(const std::vector<double>& x) const {
    const auto [on, off] = split(x);
    return evaluate_schedule(pb, cfg, on, off);
  }
};

struct StartResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> values;  // every evaluation, in order
};

// Compass search with projection onto the feasible set.
StartResult compass_search(const Decoder& d, std::vector<double> x, int budget, double min_step) {
  StartResult r;
  x = d.repair(x);
  double fx = d.evaluate(x);
  r.values.push_back(fx);
  double step = 0.25 * (d.cfg.bounds.max - d.cfg.bounds.min);
  const int n = int(x.size());
  while (int(r.values.size()) < budget && step >= min_step) {
    bool improved = false;
    for (int i = 0; i < n && !improved; ++i) {
      for (double sign : {1.0, -1.0}) {
        if (int(r.values.size()) >= budget) break;
        auto y = x;
        y[i] += sign * step;
        y = d.repair(y);
        if (y == x) continue;
        const double fy = d.evaluate(y);
        r.values.push_back(fy);
        if (fy < fx) {
          x = std::move(y);
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  r.x = std::move(x);
  r.f = fx;
  return r;
}

std::vector<std::vector<double>> starting_points(const Decoder& d,
                                                 const std::vector<std::vector<double>>& extra) {
  const auto& b = d.cfg.bounds;
  const int n = d.dims();
  std::vector<std::vector<double>> pts = extra;
  // Prior schedule: hold the last applied (or uncontrolled) price.
  std::vector<double> prior;
  if (d.cfg.control_on) prior.insert(prior.end(), d.pb.intervals, d.pb.prior_on.value_or(d.pb.fixed_on));
  if (d.cfg.control_off) prior.insert(prior.end(), d.pb.intervals, d.pb.prior_off.value_or(d.pb.fixed_off));
  pts.push_back(prior);
  pts.push_back(std::vector<double>(n, b.min));
  pts.push_back(std::vector<double>(n, b.max));
  const int total = std::max(d.cfg.starts, int(pts.size()));
  const int fill = total - int(pts.size());
  if (fill > 0) {
    std::mt19937_64 rng(d.cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> lhs(fill, std::vector<double>(n));
    for (int dim = 0; dim < n; ++dim) {
      std::vector<int> perm(fill);
      for (int i = 0; i < fill; ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int i = 0; i < fill; ++i)
        lhs[i][dim] = b.min + (b.max - b.min) * (perm[i] + u(rng)) / fill;
    }
    pts.insert(pts.end(), lhs.begin(), lhs.end());
  }
  pts.resize(total);
  return pts;
}

OpenLoopResult combine(const Decoder& d, const std::vector<StartResult>& runs) {
  OpenLoopResult out;
  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s)
    if (runs[s].f < runs[best].f) best = s;
  double running = std::numeric_limits<double>::infinity();
  double lo = running, hi = -running;
  for (const auto& r : runs)
    for (double v : r.values) {
      running = std::min(running, v);
      out.best_trace.push_back(running);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  out.evaluations = int(out.best_trace.size());
  out.objective = runs[best].f;
  out.indifferent = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
  const auto [on, off] = d.split(runs[best].x);
  out.schedule.interval_hr = d.pb.interval_hr;
  out.schedule.bounds = d.cfg.bounds;
  if (d.cfg.control_on) out.schedule.on = on;
  if (d.cfg.control_off) out.schedule.off = off;
  return out;
}

void check_problem(const OpenLoopProblem& pb, const MpcConfig& cfg) {
  cfg.validate();
  if (pb.intervals < 1) throw std::invalid_argument("problem needs at least one interval");
  if (pb.steps < 1) throw std::invalid_argument("problem needs at least one prediction step");
  if (!(pb.interval_hr > 0.0)) throw std::invalid_argument("interval length must be > 0");
}

OpenLoopResult solve(const OpenLoopProblem& pb, const MpcConfig& cfg,
                     const std::vector<std::vector<double>>& extra, bool parallel) {
  check_problem(pb, cfg);
  const Decoder d{pb, cfg};
  const auto pts = starting_points(d, extra);
  std::vector<StartResult> runs(pts.size());
  const int n = int(pts.size());
  if (parallel) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < n; ++s) {
      try {
        runs[s] = compass_search(d, pts[s], cfg.budget_per_start, cfg.min_step);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (int s = 0; s < n; ++s) runs[s] = compass_search(d, pts[s], cfg.budget_per_start, cfg.min_step);
  }
  return combine(d, runs);
}

}  // namespace

double evaluate_schedule(const OpenLoopProblem& pb, const MpcConfig& cfg,
                         const std::vector<double>& on, const std::vector<double>& off) {
  PriceProfile prices;
  prices.start_hr = pb.state.k * pb.params.dt_hr;
  prices.interval_hr = pb.interval_hr;
  prices.on = on.empty() ? std::vector<double>{pb.fixed_on} : on;
  prices.off = off.empty() ? std::vector<double>{pb.fixed_off} : off;
  const auto tr = simulate_macro(pb.forecast, prices, pb.params, pb.state, pb.steps);
  return cfg.objective == Objective::IneffectiveCruising
             ? objective_ineffective_cruising(tr, pb.params)
             : objective_total_travel_time(tr, pb.params);
}

OpenLoopResult solve_open_loop(const OpenLoopProblem& pb, const MpcConfig& cfg) {
  return solve(pb, cfg, {}, true);
}

OpenLoopResult solve_open_loop_serial(const OpenLoopProblem& pb, const MpcConfig& cfg) {
  return solve(pb, cfg, {}, false);
}

// ---- plants ---------------------------------------------------------------

MacroPlant::MacroPlant(MacroParams params, MacroDemand demand, MacroState initial)
    : params_(std::move(params)), demand_(std::move(demand)), state_(std::move(initial)) {
  params_.validate();
}

double MacroPlant::time_hr() const { return state_.k * params_.dt_hr; }

MacroState MacroPlant::state(const MacroParams&) const { return state_; }

void MacroPlant::set_prices(double fee_on, double fee_off) {
  fee_on_ = fee_on;
  fee_off_ = fee_off;
}

void MacroPlant::advance(double hours) {
  const long steps = std::lround(hours / params_.dt_hr);
  auto record = [this](const MacroState& s) {
    traj_.t_hr.push_back(s.k * params_.dt_hr);
    traj_.n_m_on.push_back(s.n_m_on);
    traj_.n_m_off.push_back(s.n_m_off);
    traj_.n_m_pass.push_back(s.n_m_pass);
    traj_.n_c.push_back(s.n_c);
    traj_.n_on.push_back(s.n_on);
    traj_.n_off.push_back(s.n_off);
    traj_.n.push_back(s.active());
    traj_.v.push_back(nfd_speed(params_.nfd, s.active()));
    traj_.occupancy.push_back(s.n_on / params_.N_on);
    traj_.o_c.push_back(s.o_c.empty() ? 0.0 : s.o_c.back());
    traj_.q_off_on.push_back(s.q_off_on.empty() ? 0.0 : s.q_off_on.back());
  };
  if (traj_.t_hr.empty()) record(state_);
  for (long i = 0; i < steps; ++i) {
    const auto idx = std::size_t(state_.k);
    const double parkers = idx < demand_.parkers.size() ? demand_.parkers[idx] : 0.0;
    const double passers = idx < demand_.passers.size() ? demand_.passers[idx] : 0.0;
    const auto split = split_demand(parkers, fee_on_, fee_off_, params_);
    cruise_hr_ += state_.n_c * params_.dt_hr;
    travel_hr_ += state_.active() * params_.dt_hr;
    state_ = macro_step(state_, {split.on, split.off, passers}, params_);
    const double circuit = params_.l_off * state_.q_off_on.back() / params_.v_off_f;
    circuit_hr_ += circuit;
    travel_hr_ += circuit;
    record(state_);
  }
}

MicroPlant::MicroPlant(Network net, ScenarioConfig cfg) : sim_(std::move(net), std::move(cfg)) {}

double MicroPlant::time_hr() const { return sim_.time_s() / 3600.0; }

MacroState MicroPlant::state(const MacroParams& params) const {
  return macro_state_from_snapshot(sim_.snapshot(), params);
}

void MicroPlant::set_prices(double fee_on, double fee_off) { sim_.set_prices(fee_on, fee_off); }

void MicroPlant::advance(double hours) { sim_.run_until(sim_.time_s() + hours * 3600.0); }

double MicroPlant::cruise_time_hr() const {
  double s = 0.0;
  for (const auto& x : sim_.trace()) s += x.cruise_time_hr;
  return s;
}

double MicroPlant::circuit_time_hr() const {
  double s = 0.0;
  for (const auto& x : sim_.trace()) s += x.circuit_time_hr;
  return s;
}

double MicroPlant::travel_time_hr() const {
  double s = 0.0;
  for (const auto& x : sim_.trace()) s += x.time_hr + x.circuit_time_hr;
  return s;
}

MacroState macro_state_from_snapshot(const PlantSnapshot& snap, const MacroParams& p) {
  if (!(snap.t_s >= 0.0)) throw std::invalid_argument("snapshot time must be >= 0");
  MacroState s;
  const double dt_s = p.dt_hr * 3600.0;
  s.k = int(std::lround(snap.t_s / dt_s));
  s.n_m_on = snap.moving_on;
  s.n_m_off = snap.moving_off;
  s.n_m_pass = snap.transit;
  s.n_c = snap.cruising;
  s.n_on = snap.parked_on;
  s.n_off = snap.parked_off;
  s.o_c.assign(s.k, 0.0);
  s.o_m_off.assign(s.k, 0.0);
  s.q_off_on.assign(s.k, 0.0);
  s.q_out_off.assign(s.k, 0.0);
  if (s.k == 0) {
    if (!snap.on_park_times_s.empty() || !snap.off_park_times_s.empty() ||
        !snap.circuit_release_s.empty())
      throw std::invalid_argument("snapshot at t = 0 cannot hold parked cohorts");
    return s;
  }
  // Cohort j with (k - j) dt <= age, so its survival is at least the vehicle's.
  auto cohort_weight = [&](double park_s, int& j) {
    const double age = std::max(0.0, snap.t_s - park_s);
    j = std::clamp(s.k - int(std::floor(age / dt_s + 1e-9)), 1, s.k);
    const double survival = 1.0 - p.duration.cdf((s.k - j) * p.dt_hr);
    return 1.0 / std::max(survival, 1e-6);
  };
  for (double t : snap.on_park_times_s) {
    int j = 0;
    const double w = cohort_weight(t, j);
    s.o_c[j - 1] += w;
  }
  for (double t : snap.off_park_times_s) {
    int j = 0;
    const double w = cohort_weight(t, j);
    s.o_m_off[j - 1] += w;
  }
  const int k_off = circuit_delay_steps(p);
  for (double release : snap.circuit_release_s) {
    // Reappears at the step containing its release time.
    const int back = std::max(s.k + 1, int(std::ceil(release / dt_s - 1e-9)));
    const int j = std::clamp(back - k_off, std::max(1, s.k - k_off + 1), s.k);
    s.q_off_on[j - 1] += 1.0;
    s.o_m_off[j - 1] += 1.0;
  }
  return s;
}

MacroDemand forecast_demand(const ScenarioConfig& cfg, double dt_hr, int steps) {
  if (!(dt_hr > 0.0)) throw std::invalid_argument("dt must be > 0");
  MacroDemand d;
  d.parkers.resize(std::max(0, steps));
  d.passers.resize(std::max(0, steps));
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * dt_hr, t1 = (k + 1) * dt_hr;
    d.parkers[k] = cfg.parkers.count * cfg.parkers.share(t0, t1, cfg.horizon_hr);
    d.passers[k] = cfg.passers.count * cfg.passers.share(t0, t1, cfg.horizon_hr);
  }
  return d;
}

MacroParams macro_params_for(const ScenarioConfig& cfg, const Network& net, MacroParams p) {
  p.N_on = net.total_parking_capacity();
  if (!net.lots().empty()) {
    const auto& lot = net.lots().front();
    p.N_off = lot.capacity;
    p.l_off = lot.circuit_length_km;
    p.v_off_f = lot.cruise_speed;
  }
  p.v_on_f = cfg.cruise_speed;
  p.duration = cfg.duration;
  p.alpha_on = cfg.alpha_on;
  p.alpha_off = cfg.alpha_off;
  p.beta = cfg.beta;
  p.horizon_hr = cfg.horizon_hr;
  return p;
}

// ---- loops ----------------------------------------------------------------

namespace {

struct Counts {
  double n_c, n_on, n_off, n;
};

Counts read_counts(const Plant& plant, const MacroParams& p) {
  const auto s = plant.state(p);
  return {s.n_c, s.n_on, s.n_off, s.active()};
}

// Advance one control interval in macro steps, recording the plant.
void advance_recorded(Plant& plant, const MacroParams& p, double interval_hr, MpcIteration& it) {
  const long steps = std::lround(interval_hr / p.dt_hr);
  auto push = [&](const Counts& c) {
    it.real_n_c.push_back(c.n_c);
    it.real_n_on.push_back(c.n_on);
    it.real_n_off.push_back(c.n_off);
    it.real_n.push_back(c.n);
  };
  push(read_counts(plant, p));
  for (long i = 0; i < steps; ++i) {
    plant.advance(p.dt_hr);
    push(read_counts(plant, p));
  }
  it.plant_cruise_hr = plant.cruise_time_hr();
  it.plant_circuit_hr = plant.circuit_time_hr();
  it.plant_travel_hr = plant.travel_time_hr();
}

void finish(MpcRunLog& log, const Plant& plant) {
  log.cruise_time_hr = plant.cruise_time_hr();
  log.circuit_time_hr = plant.circuit_time_hr();
  log.travel_time_hr = plant.travel_time_hr();
}

MacroParams on_grid(MacroParams p, const MpcConfig& cfg, double horizon_hr) {
  p.dt_hr = cfg.macro_dt_s / 3600.0;
  p.horizon_hr = horizon_hr;
  return p;
}

}  // namespace

MpcRunLog mpc_loop(Plant& plant, const MacroParams& params, const MacroDemand& forecast,
                   const MpcConfig& cfg, double horizon_hr, double fixed_on, double fixed_off) {
  cfg.validate();
  const MacroParams p = on_grid(params, cfg, cfg.prediction_horizon_hr);
  p.validate();
  const long iterations = std::lround(horizon_hr / cfg.control_interval_hr);
  MpcRunLog log;
  std::optional<double> last_on, last_off;
  for (long i = 0; i < iterations; ++i) {
    MpcIteration it;
    it.iteration = int(i);
    it.t_hr = plant.time_hr();
    OpenLoopProblem pb;
    try {
      pb.state = plant.state(p);
    } catch (const std::exception& e) {
      log.aborted = true;
      log.abort_reason = std::string("plant state read failed: ") + e.what();
      break;
    }
    pb.forecast = forecast;
    pb.params = p;
    pb.steps = int(std::lround(cfg.prediction_horizon_hr / p.dt_hr));
    pb.intervals = cfg.intervals;
    pb.interval_hr = cfg.control_interval_hr;
    pb.fixed_on = fixed_on;
    pb.fixed_off = fixed_off;
    pb.prior_on = last_on;
    pb.prior_off = last_off;
    const auto res = solve_open_loop(pb, cfg);
    it.schedule = res.schedule;
    it.predicted_objective = res.objective;
    it.applied_on = cfg.control_on ? res.schedule.on.front() : fixed_on;
    it.applied_off = cfg.control_off ? res.schedule.off.front() : fixed_off;
    if (cfg.control_on) last_on = it.applied_on;
    if (cfg.control_off) last_off = it.applied_off;

    const int interval_steps = int(std::lround(cfg.control_interval_hr / p.dt_hr));
    PriceProfile prices{pb.state.k * p.dt_hr, cfg.control_interval_hr,
                        cfg.control_on ? res.schedule.on : std::vector<double>{fixed_on},
                        cfg.control_off ? res.schedule.off : std::vector<double>{fixed_off}};
    const auto pred = simulate_macro(forecast, prices, p, pb.state, interval_steps);
    it.t_pred_hr = pred.t_hr;
    it.pred_n_c = pred.n_c;
    it.pred_n_on = pred.n_on;
    it.pred_n_off = pred.n_off;
    it.pred_n = pred.n;

    plant.set_prices(it.applied_on, it.applied_off);
    advance_recorded(plant, p, cfg.control_interval_hr, it);
    log.iterations.push_back(std::move(it));
  }
  finish(log, plant);
  return log;
}

OpenLoopResult solve_full_horizon(const MacroDemand& demand, const MacroParams& params,
                                  const MpcConfig& config, FullHorizonMode mode, int intervals,
                                  double fixed_on, double fixed_off, const MacroState& initial) {
  if (intervals < 1) throw std::invalid_argument("intervals must be >= 1");
  const double horizon = params.horizon_hr;
  MpcConfig cfg = config;
  cfg.control_interval_hr = horizon / intervals;
  cfg.intervals = intervals;
  cfg.prediction_horizon_hr = horizon;
  const MacroParams p = on_grid(params, cfg, horizon);

  OpenLoopProblem pb;
  pb.state = initial;
  pb.forecast = demand;
  pb.params = p;
  pb.steps = int(std::lround(horizon / p.dt_hr));
  pb.fixed_on = fixed_on;
  pb.fixed_off = fixed_off;

  // Static: one price held over the horizon.
  OpenLoopProblem st = pb;
  st.intervals = 1;
  st.interval_hr = horizon;
  MpcConfig scfg = cfg;
  scfg.intervals = 1;
  scfg.control_interval_hr = horizon;
  OpenLoopResult stat = solve(st, scfg, {}, true);
  auto expand = [intervals](std::vector<double> v) {
    return v.empty() ? v : std::vector<double>(intervals, v.front());
  };
  if (mode == FullHorizonMode::Static) {
    stat.schedule.on = expand(stat.schedule.on);
    stat.schedule.off = expand(stat.schedule.off);
    stat.schedule.interval_hr = horizon / intervals;
    return stat;
  }
  pb.intervals = intervals;
  pb.interval_hr = horizon / intervals;
  std::vector<double> seed;
  if (cfg.control_on) {
    const auto v = expand(stat.schedule.on);
    seed.insert(seed.end(), v.begin(), v.end());
  }
  if (cfg.control_off) {
    const auto v = expand(stat.schedule.off);
    seed.insert(seed.end(), v.begin(), v.end());
  }
  return solve(pb, cfg, {seed}, true);
}

MpcRunLog run_open_loop(Plant& plant, const PricingSchedule& schedule, double horizon_hr,
                        double fixed_on, double fixed_off, const MpcConfig& config) {
  if (!(schedule.interval_hr > 0.0)) throw std::invalid_argument("interval length must be > 0");
  const MacroParams p = on_grid(MacroParams{}, config, horizon_hr);
  const long intervals = std::lround(horizon_hr / schedule.interval_hr);
  MpcRunLog log;
  auto price_at = [](const std::vector<double>& v, long i, double fixed) {
    return v.empty() ? fixed : v[std::min<std::size_t>(i, v.size() - 1)];
  };
  for (long i = 0; i < intervals; ++i) {
    MpcIteration it;
    it.iteration = int(i);
    it.t_hr = plant.time_hr();
    it.applied_on = price_at(schedule.on, i, fixed_on);
    it.applied_off = price_at(schedule.off, i, fixed_off);
    it.schedule = schedule;
    plant.set_prices(it.applied_on, it.applied_off);
    try {
      advance_recorded(plant, p, schedule.interval_hr, it);
    } catch (const std::exception& e) {
      log.aborted = true;
      log.abort_reason = e.what();
      break;
    }
    log.iterations.push_back(std::move(it));
  }
  finish(log, plant);
  return log;
}

void write_mpc_log_csv(const MpcRunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(10);
  out << "iteration,t_hr,tau_on,tau_off,predicted_objective,plant_cruise_hr,plant_circuit_hr,"
         "plant_travel_hr\n";
  for (const auto& it : log.iterations)
    out << it.iteration << ',' << it.t_hr << ',' << it.applied_on << ',' << it.applied_off << ','
        << it.predicted_objective << ',' << it.plant_cruise_hr << ',' << it.plant_circuit_hr << ','
        << it.plant_travel_hr << '\n';
}

void write_prediction_csv(const MpcIteration& it, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(10);
  out << "t_hr,pred_n_c,real_n_c,pred_n_on,real_n_on,pred_n_off,real_n_off,pred_n,real_n\n";
  const std::size_t n = std::min(it.t_pred_hr.size(), it.real_n.size());
  for (std::size_t i = 0; i < n; ++i)
    out << it.t_pred_hr[i] << ',' << it.pred_n_c[i] << ',' << it.real_n_c[i] << ','
        << it.pred_n_on[i] << ',' << it.real_n_on[i] << ',' << it.pred_n_off[i] << ','
        << it.real_n_off[i] << ',' << it.pred_n[i] << ',' << it.real_n[i] << '\n';
}

}  // namespace parkdyn
