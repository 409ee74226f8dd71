#include "parkdyn/micro_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "parkdyn/error.hpp"

namespace parkdyn {

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t uniform_pick(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

int family_slot(Family f) {
  switch (f) {
    case Family::MovingOn: return 0;
    case Family::MovingOff: return 1;
    case Family::Transit: return 2;
    case Family::Cruising: return 3;
    default: return -1;
  }
}

double effective_spacing(const Link& l) {
  if (l.parking_capacity <= 0) return 0.0;
  return l.spot_spacing_km > 0.0 ? l.spot_spacing_km : l.length_km / l.parking_capacity;
}

constexpr double kEps = 1e-12;

Rng make_rng(std::uint64_t seed, std::uint32_t tag, std::uint32_t index = 0) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), tag, index};
  return Rng(seq);
}

}  // namespace

std::size_t local_search_step(const Network& net, std::size_t node,
                              std::optional<std::size_t> incoming,
                              std::span<const LinkOccupancy> occupancy,
                              const GuidanceConfig& guidance, Rng& rng, int avoid_region) {
  const auto outs = net.out_links(node);
  if (outs.empty())
    throw TopologyError("dead end at node " + std::to_string(net.node(node).id));

  std::optional<std::size_t> reverse;
  if (incoming) reverse = net.reverse_link(*incoming);
  std::vector<std::size_t> downstream;
  for (std::size_t l : outs)
    if (!(reverse && l == *reverse) || net.node(node).allows_u_turn) downstream.push_back(l);
  if (downstream.empty()) downstream.assign(outs.begin(), outs.end());  // forced U-turn

  if (avoid_region >= 0) {
    std::vector<std::size_t> kept;
    for (std::size_t l : downstream)
      if (net.region(l) != avoid_region) kept.push_back(l);
    if (!kept.empty()) downstream = std::move(kept);
  }

  std::vector<std::size_t> cand;
  if (guidance.local_guidance) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l : downstream) {
      if (occupancy[l].free() <= 0) continue;
      const double r = occupancy[l].ratio();
      if (r < best - kEps) {
        best = r;
        cand.clear();
      }
      if (std::abs(r - best) <= kEps) cand.push_back(l);
    }
  } else {
    for (std::size_t l : downstream)
      if (occupancy[l].capacity > 0) cand.push_back(l);
  }
  if (cand.empty()) cand = downstream;
  return cand[uniform_pick(cand.size(), rng)];
}

double effective_link_speed(const Link& link, int vehicles, std::optional<double> slowest_cruiser) {
  const double k = vehicles / (link.length_km * link.lanes);
  double v = greenshields_speed(k, link.free_flow_speed, link.jam_density);
  if (link.lanes == 1 && slowest_cruiser) v = std::min(v, *slowest_cruiser);
  return v;
}

RegionalDecision apply_regional_guidance(double occ, const GuidanceConfig& g, double compliance_u) {
  if (!g.regional_guidance) return RegionalDecision::Proceed;
  if (occ > g.regional_threshold && compliance_u < g.compliance) return RegionalDecision::Divert;
  return RegionalDecision::Proceed;
}

RegionalDecision apply_regional_guidance(double occ, const GuidanceConfig& g, Rng& rng) {
  return apply_regional_guidance(occ, g, uniform01(rng));
}

Simulator::Simulator(Network net, ScenarioConfig cfg)
    : net_(std::move(net)), cfg_(std::move(cfg)), fee_on_(cfg_.fee_on), fee_off_(cfg_.fee_off) {
  if (!(cfg_.dt_s > 0.0)) throw std::invalid_argument("dt_s must be > 0");
  if (!(cfg_.horizon_hr > 0.0)) throw std::invalid_argument("horizon_hr must be > 0");
  if (cfg_.parkers.count < 0 || cfg_.passers.count < 0)
    throw std::invalid_argument("demand counts must be >= 0");
  if (net_.boundary_nodes().size() < 2)
    throw TopologyError("network needs at least two boundary nodes for trip ends");

  const auto nl = net_.links().size();
  occ_.resize(nl);
  spot_taken_.resize(nl);
  region_capacity_.assign(std::max(1, net_.region_count()), 0);
  region_occupied_.assign(region_capacity_.size(), 0);
  for (std::size_t l = 0; l < nl; ++l) {
    const int cap = net_.link(l).parking_capacity;
    occ_[l].capacity = cap;
    spot_taken_[l].assign(cap, 0);
    region_capacity_[net_.region(l)] += cap;
    if (cap > 0) parking_links_.push_back(l);
  }
  if (!net_.lots().empty()) {
    lot_ = 0;
    lot_link_ = net_.link_index(net_.lots()[0].entry_link);
  }
  log_.horizon_s = cfg_.horizon_hr * 3600.0;
  generate_trips();
  seed_background();
}

void Simulator::set_prices(double fee_on, double fee_off) {
  fee_on_ = fee_on;
  fee_off_ = fee_off;
}

void Simulator::generate_trips() {
  Rng master = make_rng(cfg_.seed, 0x7219u);
  const auto bnodes = net_.boundary_nodes();
  const double horizon = cfg_.horizon_hr;
  auto draw = [&](bool parker, const DemandProfile& prof) {
    TripChain t;
    t.is_parker = parker;
    t.entry_time_s = prof.arrival_time(uniform01(master), horizon) * 3600.0;
    t.origin_node = bnodes[uniform_pick(bnodes.size(), master)];
    do {
      t.destination_node = bnodes[uniform_pick(bnodes.size(), master)];
    } while (t.destination_node == t.origin_node);
    t.choice_u = uniform01(master);
    t.target_u = uniform01(master);
    t.compliance_u = uniform01(master);
    t.parking_duration_hr = parker ? cfg_.duration.quantile(uniform01(master)) : 0.0;
    t.desired_speed = std::max(
        1.0, cfg_.desired_speed + cfg_.desired_speed_jitter * (2.0 * uniform01(master) - 1.0));
    t.desired_cruise_speed = std::max(
        1.0, cfg_.cruise_speed + cfg_.cruise_speed_jitter * (2.0 * uniform01(master) - 1.0));
    t.purpose = parker ? TripPurpose::ParkOn : TripPurpose::Pass;
    trips_.push_back(t);
  };
  for (int i = 0; i < cfg_.parkers.count; ++i) draw(true, cfg_.parkers);
  for (int i = 0; i < cfg_.passers.count; ++i) draw(false, cfg_.passers);
  std::stable_sort(trips_.begin(), trips_.end(),
                   [](const TripChain& a, const TripChain& b) { return a.entry_time_s < b.entry_time_s; });

  vehicles_.resize(trips_.size());
  log_.vehicles.resize(trips_.size());
  for (std::size_t i = 0; i < trips_.size(); ++i) {
    trips_[i].vehicle_id = int(i);
    vehicles_[i].trip = i;
    vehicles_[i].rng = make_rng(cfg_.seed, 0x51u, std::uint32_t(i));
    auto& rec = log_.vehicles[i];
    rec.vehicle_id = int(i);
    rec.is_parker = trips_[i].is_parker;
    rec.purpose = trips_[i].purpose;
    rec.entry_time_s = trips_[i].entry_time_s;
  }
}

void Simulator::seed_background() {
  const int wanted = cfg_.captive_spots + cfg_.preoccupied_spots;
  if (cfg_.captive_spots < 0 || cfg_.preoccupied_spots < 0)
    throw std::invalid_argument("background spot counts must be >= 0");
  if (wanted == 0) return;
  if (wanted > net_.total_parking_capacity())
    throw std::invalid_argument("more background spots than on-street capacity");
  if (cfg_.preoccupied_spots > 0 && !(cfg_.vacate_rate_per_min > 0.0))
    throw std::invalid_argument("vacate rate must be > 0");

  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t l : parking_links_)
    for (int s = 0; s < occ_[l].capacity; ++s) all.emplace_back(l, s);
  Rng rng = make_rng(cfg_.seed, 0xB6u);
  std::shuffle(all.begin(), all.end(), rng);
  for (int i = 0; i < wanted; ++i) {
    set_spot(all[i].first, all[i].second, 2);
    ++background_on_;
    if (i >= cfg_.captive_spots) {
      const int k = i - cfg_.captive_spots;
      vacate_.push_back({(k + 1) * 60.0 / cfg_.vacate_rate_per_min, all[i].first, all[i].second});
    }
  }
}

void Simulator::set_spot(std::size_t link, std::size_t spot, std::uint8_t state) {
  const bool was = spot_taken_[link][spot] != 0;
  const bool now = state != 0;
  spot_taken_[link][spot] = state;
  if (was == now) return;
  const int d = now ? 1 : -1;
  occ_[link].occupied += d;
  region_occupied_[net_.region(link)] += d;
  occupied_on_ += d;
}

double Simulator::on_street_occupancy() const {
  const int cap = net_.total_parking_capacity();
  return cap > 0 ? double(occupied_on_) / cap : 0.0;
}

double Simulator::regional_occupancy(int region) const {
  if (region < 0 || region >= int(region_capacity_.size())) return 0.0;
  return region_capacity_[region] > 0 ? double(region_occupied_[region]) / region_capacity_[region]
                                      : 1.0;
}

void Simulator::transition(std::size_t vi, Family to, double t, int link_id, int lot_id) {
  Vehicle& v = vehicles_[vi];
  if (!transition_allowed(v.family, to))
    throw ConsistencyError("illegal transition " + std::string(family_name(v.family)) + " -> " +
                           std::string(family_name(to)));
  ParkingEvent e;
  e.vehicle_id = int(vi);
  e.t_s = t;
  e.from = v.family;
  e.to = to;
  e.link_id = lot_id >= 0 ? -1 : link_id;
  e.lot_id = lot_id;
  e.dist_km = v.seg_dist_km;
  e.occ_on = on_street_occupancy();
  if (lot_) {
    const int cap = net_.lots()[*lot_].capacity;
    e.occ_off = cap > 0 ? double(lot_occupied_) / cap : 0.0;
  }
  log_.events.push_back(e);

  auto& rec = log_.vehicles[vi];
  if (to == Family::Cruising) rec.cruise_start_occ = e.occ_on;
  if (to == Family::ParkedOn || to == Family::ParkedOff) rec.parked = true;
  if (to == Family::Exited) rec.exit_time_s = t;
  if (v.family == Family::Entry) rec.purpose = trips_[vi].purpose;
  rec.final_family = to;

  v.family = to;
  v.seg_dist_km = 0.0;
  v.last_event_s = t;
}

std::vector<double> Simulator::route_jitter(Vehicle& v) {
  std::vector<double> w(net_.links().size());
  for (double& x : w) x = 1.0 + 1e-3 * uniform01(v.rng);
  return w;
}

void Simulator::route_to(std::size_t vi, std::size_t from_node, std::size_t to_node) {
  Vehicle& v = vehicles_[vi];
  const auto jitter = route_jitter(v);
  v.route = shortest_path(net_, from_node, to_node, jitter);
  if (v.route.empty() && from_node != to_node)
    throw TopologyError("no route between nodes " + std::to_string(net_.node(from_node).id) +
                        " and " + std::to_string(net_.node(to_node).id));
  v.route_pos = 0;
}

void Simulator::route_to_link(std::size_t vi, std::size_t from_node, std::size_t link) {
  route_to(vi, from_node, net_.from_index(link));
  vehicles_[vi].route.push_back(link);
}

void Simulator::enter_link(std::size_t vi, std::size_t link, double) {
  Vehicle& v = vehicles_[vi];
  v.where = Where::OnLink;
  v.link = link;
  v.pos_km = 0.0;
}

std::size_t Simulator::pick_exit_node(Vehicle& v, std::size_t current) const {
  const std::size_t planned = trips_[v.trip].destination_node;
  if (planned != current) return planned;
  const auto b = net_.boundary_nodes();
  std::size_t pick;
  do {
    pick = b[uniform_pick(b.size(), v.rng)];
  } while (pick == current);
  return pick;
}

void Simulator::inject(std::size_t vi, double t) {
  Vehicle& v = vehicles_[vi];
  TripChain& trip = trips_[vi];
  v.clock_s = t;
  v.last_event_s = t;
  ++summary_.injected;

  Family fam = Family::Transit;
  if (trip.is_parker) {
    bool off = false;
    const bool has_lot = lot_ && net_.lots()[*lot_].capacity > 0;
    if (has_lot && !parking_links_.empty()) {
      const double fees[] = {fee_on_, fee_off_};
      const double alphas[] = {cfg_.alpha_on, cfg_.alpha_off};
      off = sample_index(logit_probabilities(fees, alphas, cfg_.beta), trip.choice_u) == 1;
    } else {
      off = has_lot;
    }
    if (!off && parking_links_.empty()) off = false;
    trip.purpose = off ? TripPurpose::ParkOff : TripPurpose::ParkOn;
    fam = off ? Family::MovingOff : Family::MovingOn;
  }

  std::size_t first_link = 0;
  if (fam == Family::MovingOn && !parking_links_.empty()) {
    const auto idx = std::min(parking_links_.size() - 1,
                              std::size_t(trip.target_u * parking_links_.size()));
    v.target = parking_links_[idx];
    route_to_link(vi, trip.origin_node, *v.target);
  } else if (fam == Family::MovingOff) {
    route_to_link(vi, trip.origin_node, lot_link_);
  } else {
    if (trip.is_parker) {  // nowhere to park at all: drive through
      trip.purpose = TripPurpose::Pass;
      fam = Family::Transit;
    }
    v.exit_node = trip.destination_node;
    route_to(vi, trip.origin_node, v.exit_node);
  }
  first_link = v.route[0];
  v.route_pos = 1;
  enter_link(vi, first_link, t);
  transition(vi, fam, t, net_.link(first_link).id, -1);
}

void Simulator::depart(std::size_t vi, double t) {
  Vehicle& v = vehicles_[vi];
  v.clock_s = t;
  if (v.where == Where::ParkedOn) {
    transition(vi, Family::Transit, t, net_.link(v.link).id, -1);
    set_spot(v.link, v.spot, 0);
    v.where = Where::OnLink;
    v.pos_km = spot_position(v.link, v.spot);
    const std::size_t node = net_.to_index(v.link);
    v.exit_node = pick_exit_node(v, node);
    route_to(vi, node, v.exit_node);
  } else {
    transition(vi, Family::Transit, t, -1, net_.lots()[*lot_].id);
    --lot_occupied_;
    v.where = Where::OnLink;
    v.link = lot_link_;
    v.pos_km = net_.link(lot_link_).length_km;
    const std::size_t node = net_.to_index(lot_link_);
    v.exit_node = pick_exit_node(v, node);
    route_to(vi, node, v.exit_node);
  }
}

void Simulator::release_from_circuit(std::size_t vi, double t) {
  Vehicle& v = vehicles_[vi];
  v.clock_s = t;
  v.where = Where::OnLink;
  v.link = lot_link_;
  v.pos_km = net_.link(lot_link_).length_km;
  v.route.clear();
  v.route_pos = 0;
}

double Simulator::spot_position(std::size_t link, std::size_t spot) const {
  return (double(spot) + 0.5) * effective_spacing(net_.link(link));
}

std::optional<std::size_t> Simulator::free_spot_between(std::size_t link, double p0,
                                                        double p1) const {
  const Link& l = net_.link(link);
  if (occ_[link].free() <= 0) return std::nullopt;
  const double d = effective_spacing(l);
  const long lo = std::max(0L, long(std::ceil(p0 / d - 0.5 - 1e-9)));
  const long hi = std::min(long(l.parking_capacity) - 1, long(std::floor(p1 / d - 0.5 + 1e-9)));
  for (long j = lo; j <= hi; ++j)
    if (spot_taken_[link][j] == 0) return std::size_t(j);
  return std::nullopt;
}

void Simulator::park_on_street(std::size_t vi, std::size_t spot, double t) {
  Vehicle& v = vehicles_[vi];
  transition(vi, Family::ParkedOn, t, net_.link(v.link).id, -1);
  set_spot(v.link, spot, 1);
  v.where = Where::ParkedOn;
  v.spot = spot;
  v.pos_km = spot_position(v.link, spot);
  v.park_time_s = t;
  v.park_until_s = t + std::max(1.0, trips_[vi].parking_duration_hr * 3600.0);
  v.target.reset();
}

void Simulator::arrive_at_lot(std::size_t vi, double t) {
  Vehicle& v = vehicles_[vi];
  const OffStreetLot& lot = net_.lots()[*lot_];
  if (lot_occupied_ < lot.capacity) {
    transition(vi, Family::ParkedOff, t, -1, lot.id);
    ++lot_occupied_;
    v.where = Where::ParkedOff;
    v.park_time_s = t;
    v.park_until_s = t + std::max(1.0, trips_[vi].parking_duration_hr * 3600.0);
    return;
  }
  // Full: drive the internal circuit, then search on street from the lot exit.
  transition(vi, Family::Cruising, t, -1, lot.id);
  const double hours = lot.circuit_length_km / lot.cruise_speed;
  v.where = Where::InCircuit;
  v.circuit_until_s = t + hours * 3600.0;
  auto& rec = log_.vehicles[vi];
  rec.circuit_km += lot.circuit_length_km;
  rec.circuit_hr += hours;
  rec.free_flow_hr += hours;
}

bool Simulator::divert_at(std::size_t vi, std::size_t next_link) const {
  const Vehicle& v = vehicles_[vi];
  if (!cfg_.guidance.regional_guidance) return false;
  const int here = net_.region(v.link);
  const int there = net_.region(next_link);
  if (here == there) return false;
  return apply_regional_guidance(regional_occupancy(there), cfg_.guidance,
                                 trips_[vi].compliance_u) == RegionalDecision::Divert;
}

void Simulator::search_from(std::size_t vi, std::size_t node, double t) {
  Vehicle& v = vehicles_[vi];
  int avoid = -1;
  if (cfg_.guidance.regional_guidance) {
    const int here = net_.region(v.link);
    for (int r = 0; r < int(region_capacity_.size()); ++r)
      if (r != here && apply_regional_guidance(regional_occupancy(r), cfg_.guidance,
                                               trips_[vi].compliance_u) ==
                           RegionalDecision::Divert)
        avoid = r;
  }
  const std::size_t next = local_search_step(net_, node, v.link, occ_, cfg_.guidance, v.rng, avoid);
  enter_link(vi, next, t);
}

bool Simulator::arrive_at_node(std::size_t vi, double t) {
  Vehicle& v = vehicles_[vi];
  const std::size_t node = net_.to_index(v.link);
  switch (v.family) {
    case Family::MovingOn: {
      if (v.target && *v.target == v.link) {
        transition(vi, Family::Cruising, t, net_.link(v.link).id, -1);
        v.target.reset();
        search_from(vi, node, t);
        return true;
      }
      std::size_t next = v.route[v.route_pos];
      if (divert_at(vi, next)) {
        const int here = net_.region(v.link);
        std::vector<std::size_t> local;
        for (std::size_t l : parking_links_)
          if (net_.region(l) == here) local.push_back(l);
        if (!local.empty()) {
          v.target = local[uniform_pick(local.size(), v.rng)];
          if (*v.target == v.link) {
            // Retargeted to the link just driven: it was scanned, so search from here.
            transition(vi, Family::Cruising, t, net_.link(v.link).id, -1);
            v.target.reset();
            search_from(vi, node, t);
            return true;
          }
          route_to_link(vi, node, *v.target);
          next = v.route[0];
          v.route_pos = 0;
        }
      }
      ++v.route_pos;
      enter_link(vi, next, t);
      return true;
    }
    case Family::MovingOff:
      if (v.link == lot_link_ && v.route_pos >= v.route.size()) {
        arrive_at_lot(vi, t);
        return false;
      }
      enter_link(vi, v.route[v.route_pos++], t);
      return true;
    case Family::Transit:
      if (v.route_pos >= v.route.size()) {
        transition(vi, Family::Exited, t, net_.link(v.link).id, -1);
        v.where = Where::Exited;
        ++exited_;
        return false;
      }
      enter_link(vi, v.route[v.route_pos++], t);
      return true;
    case Family::Cruising:
      search_from(vi, node, t);
      return true;
    default:
      throw ConsistencyError("vehicle on the road in a parked family");
  }
}

void Simulator::move(std::size_t vi, double t_from, double t_to, std::span<const double> link_speed,
                     StepSample& acc) {
  Vehicle& v = vehicles_[vi];
  const TripChain& trip = trips_[vi];
  auto& rec = log_.vehicles[vi];
  double t = t_from;
  // Bounded so a zero-length cycle cannot spin forever.
  for (int hops = 0; hops < 10000 && t < t_to - kEps; ++hops) {
    const Link& l = net_.link(v.link);
    const bool cruising = v.family == Family::Cruising;
    const double own = cruising ? trip.desired_cruise_speed : trip.desired_speed;
    const double speed = std::min(link_speed[v.link], own);
    const double span_hr = (t_to - t) / 3600.0;
    const int slot = family_slot(v.family);

    auto drive = [&](double dist_km, double hours) {
      rec.dist_km[slot] += dist_km;
      rec.time_hr[slot] += hours;
      rec.total_dist_km += dist_km;
      rec.free_flow_hr += dist_km / std::min(l.free_flow_speed, trip.desired_speed);
      v.seg_dist_km += dist_km;
      acc.distance_km += dist_km;
      acc.time_hr += hours;
      if (cruising) acc.cruise_time_hr += hours;
    };

    if (speed <= 0.0) {
      drive(0.0, span_hr);
      break;
    }
    const double reach = std::min(l.length_km, v.pos_km + speed * span_hr);
    const bool scans = (cruising || (v.family == Family::MovingOn && v.target && *v.target == v.link)) &&
                       l.parking_capacity > 0;
    if (scans) {
      if (auto spot = free_spot_between(v.link, v.pos_km, reach)) {
        const double d = std::max(0.0, spot_position(v.link, *spot) - v.pos_km);
        const double h = d / speed;
        drive(d, h);
        t += h * 3600.0;
        v.pos_km += d;
        park_on_street(vi, *spot, t);
        return;
      }
    }
    const double to_end = l.length_km - v.pos_km;
    if (v.pos_km + speed * span_hr >= l.length_km - kEps) {
      const double h = std::max(0.0, to_end) / speed;
      drive(std::max(0.0, to_end), h);
      t = std::min(t_to, t + h * 3600.0);
      v.pos_km = l.length_km;
      if (!arrive_at_node(vi, t)) return;
      continue;
    }
    drive(speed * span_hr, span_hr);
    v.pos_km += speed * span_hr;
    t = t_to;
  }
}

void Simulator::step() {
  const double t0 = t_s_;
  const double t1 = t0 + cfg_.dt_s;
  StepSample acc;
  acc.t_s = t0;
  acc.dt_s = cfg_.dt_s;
  const std::size_t events_before = log_.events.size();

  for (auto& v : vehicles_) v.clock_s = t0;

  while (next_trip_ < trips_.size() && trips_[next_trip_].entry_time_s < t1) {
    inject(next_trip_, std::max(t0, trips_[next_trip_].entry_time_s));
    ++next_trip_;
  }
  while (next_vacate_ < vacate_.size() && vacate_[next_vacate_].t_s < t1) {
    const auto& vc = vacate_[next_vacate_++];
    set_spot(vc.link, vc.spot, 0);
    --background_on_;
  }
  for (std::size_t vi = 0; vi < next_trip_; ++vi) {
    Vehicle& v = vehicles_[vi];
    if ((v.where == Where::ParkedOn || v.where == Where::ParkedOff) && v.park_until_s < t1)
      depart(vi, std::max(t0, v.park_until_s));
    else if (v.where == Where::InCircuit) {
      const double start = std::max(t0, v.last_event_s);
      const double end = std::min(t1, v.circuit_until_s);
      if (end > start) acc.circuit_time_hr += (end - start) / 3600.0;
      if (v.circuit_until_s < t1) release_from_circuit(vi, std::max(t0, v.circuit_until_s));
    }
  }

  // Link speeds from the loading at the start of movement.
  const auto nl = net_.links().size();
  std::vector<int> count(nl, 0);
  std::vector<double> slowest(nl, std::numeric_limits<double>::infinity());
  for (std::size_t vi = 0; vi < next_trip_; ++vi) {
    const Vehicle& v = vehicles_[vi];
    if (v.where != Where::OnLink) continue;
    ++count[v.link];
    if (v.family == Family::Cruising)
      slowest[v.link] = std::min(slowest[v.link], trips_[vi].desired_cruise_speed);
  }
  std::vector<double> speed(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    std::optional<double> cruiser;
    if (std::isfinite(slowest[l])) cruiser = slowest[l];
    speed[l] = effective_link_speed(net_.link(l), count[l], cruiser);
  }

  for (std::size_t vi = 0; vi < next_trip_; ++vi) {
    Vehicle& v = vehicles_[vi];
    if (v.where == Where::OnLink) move(vi, v.clock_s, t1, speed, acc);
  }

  for (std::size_t vi = 0; vi < next_trip_; ++vi) {
    const Vehicle& v = vehicles_[vi];
    switch (v.where) {
      case Where::OnLink:
        switch (v.family) {
          case Family::MovingOn: ++acc.moving_on; break;
          case Family::MovingOff: ++acc.moving_off; break;
          case Family::Transit: ++acc.transit; break;
          case Family::Cruising: ++acc.cruising; break;
          default: break;
        }
        break;
      case Where::InCircuit: ++acc.in_circuit; break;
      default: break;
    }
  }
  acc.parked_on = occupied_on_;
  acc.parked_off = lot_occupied_;
  acc.exited = exited_;
  acc.injected = int(next_trip_);

  const bool stalled = acc.active() > 0 && acc.distance_km == 0.0 &&
                       log_.events.size() == events_before;
  stalled_steps_ = stalled ? stalled_steps_ + 1 : 0;
  if (stalled_steps_ >= cfg_.gridlock_steps && !summary_.gridlock) {
    summary_.gridlock = true;
    summary_.gridlock_time_s = t1;
  }
  trace_.push_back(acc);
  t_s_ = t1;
  if (!conserved()) summary_.conservation_ok = false;
}

void Simulator::run_until(double t_s) {
  while (t_s_ < t_s - 1e-9) step();
}

bool Simulator::conserved() const {
  int on_road = 0, circuit = 0, parked_on = 0, parked_off = 0, gone = 0;
  for (std::size_t vi = 0; vi < next_trip_; ++vi) {
    switch (vehicles_[vi].where) {
      case Where::OnLink: ++on_road; break;
      case Where::InCircuit: ++circuit; break;
      case Where::ParkedOn: ++parked_on; break;
      case Where::ParkedOff: ++parked_off; break;
      case Where::Exited: ++gone; break;
      case Where::Pending: return false;
    }
  }
  return int(next_trip_) == on_road + circuit + parked_on + parked_off + gone &&
         parked_on == occupied_on_ - background_on_ && parked_off == lot_occupied_ &&
         gone == exited_;
}

PlantSnapshot Simulator::snapshot() const {
  PlantSnapshot s;
  s.t_s = t_s_;
  for (std::size_t vi = 0; vi < next_trip_; ++vi) {
    const Vehicle& v = vehicles_[vi];
    switch (v.where) {
      case Where::OnLink:
        switch (v.family) {
          case Family::MovingOn: ++s.moving_on; break;
          case Family::MovingOff: ++s.moving_off; break;
          case Family::Transit: ++s.transit; break;
          case Family::Cruising: ++s.cruising; break;
          default: break;
        }
        break;
      case Where::InCircuit: s.circuit_release_s.push_back(v.circuit_until_s); break;
      case Where::ParkedOn: s.on_park_times_s.push_back(v.park_time_s); break;
      case Where::ParkedOff: s.off_park_times_s.push_back(v.park_time_s); break;
      default: break;
    }
  }
  s.parked_on = occupied_on_;
  s.parked_off = lot_occupied_;
  s.background_on = background_on_;
  return s;
}

RunResult Simulator::result() const {
  RunResult r;
  r.log.events = log_.events;
  r.log.horizon_s = log_.horizon_s;
  r.log.vehicles.assign(log_.vehicles.begin(), log_.vehicles.begin() + next_trip_);
  r.trace = trace_;
  r.summary = summary_;
  r.summary.exited = exited_;
  r.network_length_km = net_.total_length_km();
  r.on_street_capacity = net_.total_parking_capacity();
  r.lot_capacity = lot_ ? net_.lots()[*lot_].capacity : 0;
  return r;
}

RunResult run_scenario(const Network& net, const ScenarioConfig& cfg) {
  Simulator sim(net, cfg);
  sim.run();
  return sim.result();
}

}  // namespace parkdyn
