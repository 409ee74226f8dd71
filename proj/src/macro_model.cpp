#include "parkdyn/macro_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>

#include "parkdyn/choice.hpp"
#include "parkdyn/error.hpp"

namespace parkdyn {

double nfd_speed(const NfdModel& nfd, double n) {
  return nfd.v0 / (1.0 + std::exp((n - nfd.n0) / nfd.w));
}

void MacroParams::validate() const {
  auto positive = [](double x, const char* what) {
    if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
  };
  positive(nfd.v0, "nfd v0");
  positive(nfd.w, "nfd w");
  positive(v_on_f, "v_on_f");
  positive(v_off_f, "v_off_f");
  positive(l_m_on, "l_m_on");
  positive(l_m_off, "l_m_off");
  positive(l_m_pass, "l_m_pass");
  positive(N_on, "N_on");
  positive(N_off, "N_off");
  positive(l_off, "l_off");
  positive(dt_hr, "dt");
  positive(horizon_hr, "horizon");
  if (distance.kind == DistanceKind::ExpDistance) positive(distance.a, "distance a");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
}

int MacroParams::steps() const { return int(std::lround(horizon_hr / dt_hr)); }

int circuit_delay_steps(const MacroParams& p) {
  return int(std::floor(p.l_off / (p.v_off_f * p.dt_hr) + 0.5));
}

double MacroState::in_circuit(int k_off) const {
  double s = 0.0;
  const int n = int(q_off_on.size());
  for (int j = std::max(0, n - k_off); j < n; ++j) s += q_off_on[j];
  return s;
}

double MacroState::total(int k_off) const {
  return n_m_off + n_m_on + n_m_pass + n_c + n_off + n_on + in_circuit(k_off) + exited;
}

DemandSplit split_demand(double inflow, double fee_on, double fee_off, const MacroParams& p) {
  if (!(inflow >= 0.0)) throw std::invalid_argument("parking inflow must be >= 0");
  const double fees[] = {fee_on, fee_off};
  const double alphas[] = {p.alpha_on, p.alpha_off};
  const auto pr = logit_probabilities(fees, alphas, p.beta);
  return {inflow * pr[0], inflow * pr[1]};
}

Redepartures redeparture_flows(const MacroState& s, const DurationDistribution& f, int k,
                               double dt) {
  Redepartures r;
  // Cohort j (1-based) parked during step j; the history holds steps 1..k-1.
  const int last = std::min<int>(k - 1, int(s.o_c.size()));
  for (int j = 1; j <= last; ++j) {
    const double prob = f.cdf((k - j) * dt) - f.cdf((k - j - 1) * dt);
    if (prob == 0.0) continue;
    r.on += s.o_c[j - 1] * prob;
    r.off += (s.o_m_off[j - 1] - s.q_off_on[j - 1]) * prob;
  }
  return r;
}

Redepartures redeparture_flows_uniform(const MacroState& s, double T, int k, double dt) {
  Redepartures r;
  const int last = std::min<int>(k - 1, int(s.o_c.size()));
  for (int j = 1; j <= last; ++j) {
    r.on += s.o_c[j - 1];
    r.off += s.o_m_off[j - 1] - s.q_off_on[j - 1];
  }
  r.on *= dt / T;
  r.off *= dt / T;
  return r;
}

Outflows productions_and_outflows(const MacroState& s, const MacroParams& p) {
  for (double x : {s.n_m_off, s.n_m_on, s.n_m_pass, s.n_c, s.n_off, s.n_on})
    if (x < 0.0) throw ConsistencyError("negative accumulation in macro state");
  Outflows o;
  const double n = s.active();
  o.speed = nfd_speed(p.nfd, n);
  o.occupancy = std::clamp(s.n_on / p.N_on, 0.0, 1.0);
  o.l_c = evaluate_saturated(p.distance, o.occupancy);
  const double v_on = std::min(p.v_on_f, o.speed);
  const double P_c = s.n_c * v_on;
  const double P_m = std::max(0.0, n * o.speed - P_c);
  o.o_c = o.l_c > 0.0 ? P_c * p.dt_hr / o.l_c : 0.0;
  const double moving = s.n_m_on + s.n_m_off + s.n_m_pass;
  if (moving > 0.0) {
    o.o_m_on = P_m * s.n_m_on * p.dt_hr / (p.l_m_on * moving);
    o.o_m_off = P_m * s.n_m_off * p.dt_hr / (p.l_m_off * moving);
    o.o_m_pass = P_m * s.n_m_pass * p.dt_hr / (p.l_m_pass * moving);
  }
  return o;
}

double overflow(double o_m_off, double n_m_off_prev, double q_in_off, double n_off_prev,
                double q_out_off, double N_off) {
  const double entering = std::min(o_m_off, n_m_off_prev + q_in_off);
  const double free = N_off - n_off_prev + q_out_off;
  return std::max(0.0, entering - free);
}

namespace {
// Rounding noise only; anything larger is a real violation caught by the
// conservation check.
double snap(double x) { return (x < 0.0 && x > -1e-9) ? 0.0 : x; }
}  // namespace

MacroState macro_step(const MacroState& prev, const Inflows& in, const MacroParams& p) {
  if (in.on < 0.0 || in.off < 0.0 || in.pass < 0.0)
    throw std::invalid_argument("inflows must be >= 0");
  const int k = prev.k + 1;
  const int k_off = circuit_delay_steps(p);

  const Redepartures out = redeparture_flows(prev, p.duration, k, p.dt_hr);
  Outflows o = productions_and_outflows(prev, p);

  o.o_m_off = std::min(o.o_m_off, prev.n_m_off + in.off);
  o.o_m_on = std::min(o.o_m_on, prev.n_m_on + in.on);
  o.o_m_pass = std::min(o.o_m_pass, prev.n_m_pass + in.pass + out.on + out.off);

  const double q_off_on = overflow(o.o_m_off, prev.n_m_off, in.off, prev.n_off, out.off, p.N_off);
  const int back_idx = k - k_off;  // step whose turned-away vehicles reappear now
  double returning = 0.0;
  if (back_idx >= 1 && back_idx < k) returning = prev.q_off_on[back_idx - 1];
  if (back_idx == k) returning = q_off_on;

  const double street_room = p.N_on - prev.n_on + out.on;
  o.o_c = std::min({o.o_c, prev.n_c + returning + o.o_m_on, street_room});
  o.o_c = std::max(0.0, o.o_c);

  MacroState s = prev;
  s.k = k;
  s.n_m_off = snap(prev.n_m_off + in.off - o.o_m_off);
  s.n_m_on = snap(prev.n_m_on + in.on - o.o_m_on);
  s.n_m_pass = snap(prev.n_m_pass + in.pass + out.on + out.off - o.o_m_pass);
  s.n_c = snap(prev.n_c + returning + o.o_m_on - o.o_c);
  s.n_off = snap(prev.n_off + o.o_m_off - q_off_on - out.off);
  s.n_on = snap(prev.n_on + o.o_c - out.on);
  // A binding cap fills the facility exactly; summing the terms can land an ulp above.
  if (o.o_c == street_room) s.n_on = p.N_on;
  if (q_off_on > 0.0) s.n_off = p.N_off;
  s.exited = prev.exited + o.o_m_pass;
  s.o_c.push_back(o.o_c);
  s.o_m_off.push_back(o.o_m_off);
  s.q_off_on.push_back(q_off_on);
  s.q_out_off.push_back(out.off);

  const double expected = prev.total(k_off) + in.on + in.off + in.pass;
  const double residual = std::abs(s.total(k_off) - expected);
  if (residual > 1e-9 * std::max(1.0, expected))
    throw ConsistencyError("macro step " + std::to_string(k) + " lost mass: residual " +
                           std::to_string(residual));
  for (double x : {s.n_m_off, s.n_m_on, s.n_m_pass, s.n_c, s.n_off, s.n_on})
    if (x < 0.0) throw ConsistencyError("macro step produced a negative accumulation");
  return s;
}

double PriceProfile::on_at(double t_hr) const {
  if (on.empty()) return 0.0;
  const long i = long(std::floor((t_hr - start_hr) / interval_hr + 1e-9));
  return on[std::clamp<long>(i, 0, long(on.size()) - 1)];
}

double PriceProfile::off_at(double t_hr) const {
  if (off.empty()) return 0.0;
  const long i = long(std::floor((t_hr - start_hr) / interval_hr + 1e-9));
  return off[std::clamp<long>(i, 0, long(off.size()) - 1)];
}

namespace {

void record(MacroTrajectory& tr, const MacroState& s, const MacroParams& p) {
  tr.t_hr.push_back(s.k * p.dt_hr);
  tr.n_m_on.push_back(s.n_m_on);
  tr.n_m_off.push_back(s.n_m_off);
  tr.n_m_pass.push_back(s.n_m_pass);
  tr.n_c.push_back(s.n_c);
  tr.n_on.push_back(s.n_on);
  tr.n_off.push_back(s.n_off);
  tr.n.push_back(s.active());
  tr.v.push_back(nfd_speed(p.nfd, s.active()));
  tr.occupancy.push_back(s.n_on / p.N_on);
}

}  // namespace

MacroTrajectory simulate_macro(const MacroDemand& demand, const PriceProfile& prices,
                               const MacroParams& params, const MacroState& initial, int steps) {
  params.validate();
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  const int k_off = circuit_delay_steps(params);
  MacroTrajectory tr;
  MacroState s = initial;
  record(tr, s, params);
  for (auto* series : {&tr.o_c, &tr.q_off_on, &tr.q_out_on, &tr.q_out_off, &tr.q_in_on,
                       &tr.q_in_off, &tr.conservation_residual})
    series->push_back(0.0);

  const double base = initial.total(k_off);
  double cumulative_in = 0.0;
  for (int i = 0; i < steps; ++i) {
    const int k = s.k + 1;
    const auto idx = std::size_t(k - 1);
    const double parkers = idx < demand.parkers.size() ? demand.parkers[idx] : 0.0;
    const double passers = idx < demand.passers.size() ? demand.passers[idx] : 0.0;
    const double t_start = (k - 1) * params.dt_hr;
    const DemandSplit split =
        split_demand(parkers, prices.on_at(t_start), prices.off_at(t_start), params);
    const Redepartures out = redeparture_flows(s, params.duration, k, params.dt_hr);
    s = macro_step(s, {split.on, split.off, passers}, params);
    cumulative_in += parkers + passers;

    record(tr, s, params);
    tr.o_c.push_back(s.o_c.back());
    tr.q_off_on.push_back(s.q_off_on.back());
    tr.q_out_on.push_back(out.on);
    tr.q_out_off.push_back(out.off);
    tr.q_in_on.push_back(split.on);
    tr.q_in_off.push_back(split.off);
    const double expected = base + cumulative_in;
    tr.conservation_residual.push_back(std::abs(s.total(k_off) - expected) /
                                       std::max(1.0, expected));
  }
  return tr;
}

MacroTrajectory simulate_macro(const MacroDemand& demand, const PriceProfile& prices,
                               const MacroParams& params) {
  return simulate_macro(demand, prices, params, MacroState{}, params.steps());
}

void write_macro_csv(const MacroTrajectory& tr, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(10);
  out << "t,n_m_on,n_m_off,n_m_pass,n_c,n_on,n_off,v,O_on,o_c,q_off_on,q_out_on,q_out_off\n";
  for (std::size_t i = 0; i < tr.t_hr.size(); ++i)
    out << tr.t_hr[i] << ',' << tr.n_m_on[i] << ',' << tr.n_m_off[i] << ',' << tr.n_m_pass[i]
        << ',' << tr.n_c[i] << ',' << tr.n_on[i] << ',' << tr.n_off[i] << ',' << tr.v[i] << ','
        << tr.occupancy[i] << ',' << tr.o_c[i] << ',' << tr.q_off_on[i] << ',' << tr.q_out_on[i]
        << ',' << tr.q_out_off[i] << '\n';
}

}  // namespace parkdyn
