#include "parkdyn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace parkdyn {

Network::Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<OffStreetLot> lots,
                 std::vector<int> link_regions)
    : nodes_(std::move(nodes)),
      links_(std::move(links)),
      lots_(std::move(lots)),
      regions_(std::move(link_regions)) {
  if (nodes_.empty()) throw std::invalid_argument("network has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!node_by_id_.emplace(nodes_[i].id, i).second)
      throw std::invalid_argument("duplicate node id " + std::to_string(nodes_[i].id));
  }
  if (regions_.empty()) regions_.assign(links_.size(), 0);
  if (regions_.size() != links_.size())
    throw std::invalid_argument("region assignment must cover every link");

  out_.assign(nodes_.size(), {});
  from_.reserve(links_.size());
  to_.reserve(links_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    const std::string where = "link " + std::to_string(l.id);
    if (!link_by_id_.emplace(l.id, i).second)
      throw std::invalid_argument("duplicate link id " + std::to_string(l.id));
    auto f = node_by_id_.find(l.from);
    auto t = node_by_id_.find(l.to);
    if (f == node_by_id_.end() || t == node_by_id_.end())
      throw std::invalid_argument(where + ": endpoint refers to a missing node");
    if (!(l.length_km > 0.0)) throw std::invalid_argument(where + ": length must be > 0");
    if (l.lanes < 1) throw std::invalid_argument(where + ": lanes must be >= 1");
    if (!(l.free_flow_speed > 0.0))
      throw std::invalid_argument(where + ": free_flow_speed must be > 0");
    if (!(l.jam_density > 0.0)) throw std::invalid_argument(where + ": jam_density must be > 0");
    if (l.parking_capacity < 0)
      throw std::invalid_argument(where + ": parking_capacity must be >= 0");
    if (l.spot_spacing_km < 0.0)
      throw std::invalid_argument(where + ": spot_spacing must be >= 0");
    if (l.parking_capacity > 0 &&
        l.spot_spacing_km * l.parking_capacity > l.length_km * (1.0 + 1e-12))
      throw std::invalid_argument(where + ": parking spots do not fit on the link");
    from_.push_back(f->second);
    to_.push_back(t->second);
    out_[f->second].push_back(i);
    total_length_ += l.length_km;
    total_capacity_ += l.parking_capacity;
  }
  if (!(total_length_ > 0.0)) throw std::invalid_argument("network has zero total length");

  std::set<LotId> lot_ids;
  for (const auto& lot : lots_) {
    const std::string where = "lot " + std::to_string(lot.id);
    if (!lot_ids.insert(lot.id).second) throw std::invalid_argument("duplicate " + where);
    if (!link_by_id_.contains(lot.entry_link))
      throw std::invalid_argument(where + ": entry link does not exist");
    if (lot.capacity < 0) throw std::invalid_argument(where + ": capacity must be >= 0");
    if (!(lot.circuit_length_km > 0.0))
      throw std::invalid_argument(where + ": circuit length must be > 0");
    if (!(lot.cruise_speed > 0.0)) throw std::invalid_argument(where + ": cruise speed must be > 0");
  }

  std::vector<std::set<std::size_t>> neighbours(nodes_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) {
    neighbours[from_[i]].insert(to_[i]);
    neighbours[to_[i]].insert(from_[i]);
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n)
    if (neighbours[n].size() < 4 && !out_[n].empty()) boundary_.push_back(n);
}

std::size_t Network::node_index(NodeId id) const {
  auto it = node_by_id_.find(id);
  if (it == node_by_id_.end()) throw std::out_of_range("unknown node id " + std::to_string(id));
  return it->second;
}

std::size_t Network::link_index(LinkId id) const {
  auto it = link_by_id_.find(id);
  if (it == link_by_id_.end()) throw std::out_of_range("unknown link id " + std::to_string(id));
  return it->second;
}

std::optional<std::size_t> Network::reverse_link(std::size_t link_index) const {
  const std::size_t head = to_[link_index];
  const std::size_t tail = from_[link_index];
  for (std::size_t cand : out_[head])
    if (to_[cand] == tail) return cand;
  return std::nullopt;
}

int Network::region_count() const {
  int m = 0;
  for (int r : regions_) m = std::max(m, r + 1);
  return m;
}

Network build_grid(int rows, int cols, double link_length_km, double free_flow_speed,
                   double jam_density, int parking_capacity_per_link, double spot_spacing_km) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("grid needs at least 2 rows and 2 cols");
  if (!(link_length_km > 0.0) || !(free_flow_speed > 0.0) || !(jam_density > 0.0))
    throw std::invalid_argument("grid link length, speed and jam density must be positive");
  if (parking_capacity_per_link < 0)
    throw std::invalid_argument("parking capacity must be non-negative");

  std::vector<Node> nodes;
  nodes.reserve(std::size_t(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      nodes.push_back({r * cols + c, c * link_length_km * 1000.0, r * link_length_km * 1000.0,
                       false});

  const double spacing = spot_spacing_km > 0.0 || parking_capacity_per_link == 0
                             ? spot_spacing_km
                             : link_length_km / parking_capacity_per_link;
  std::vector<Link> links;
  std::vector<int> regions;
  auto add = [&](int from, int to) {
    Link l;
    l.id = int(links.size());
    l.from = from;
    l.to = to;
    l.length_km = link_length_km;
    l.free_flow_speed = free_flow_speed;
    l.jam_density = jam_density;
    l.parking_capacity = parking_capacity_per_link;
    l.spot_spacing_km = spacing;
    links.push_back(l);
    regions.push_back((to / cols) >= rows / 2 ? 1 : 0);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      add(r * cols + c, r * cols + c + 1);
      add(r * cols + c + 1, r * cols + c);
    }
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      add(r * cols + c, (r + 1) * cols + c);
      add((r + 1) * cols + c, r * cols + c);
    }
  return Network(std::move(nodes), std::move(links), {}, std::move(regions));
}

double greenshields_speed(double density, double free_flow_speed, double jam_density) {
  return std::max(0.0, free_flow_speed * (1.0 - density / jam_density));
}

std::vector<std::size_t> shortest_path(const Network& net, std::size_t from_node,
                                       std::size_t to_node, std::span<const double> weight_jitter) {
  const std::size_t n = net.nodes().size();
  if (from_node >= n || to_node >= n) throw std::out_of_range("shortest_path: node index");
  if (from_node == to_node) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<std::size_t> via(n, std::numeric_limits<std::size_t>::max());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[from_node] = 0.0;
  pq.emplace(0.0, from_node);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == to_node) break;
    for (std::size_t li : net.out_links(u)) {
      const Link& l = net.link(li);
      double w = l.length_km / l.free_flow_speed;
      if (!weight_jitter.empty()) w *= weight_jitter[li];
      const std::size_t v = net.to_index(li);
      if (d + w < dist[v]) {
        dist[v] = d + w;
        via[v] = li;
        pq.emplace(dist[v], v);
      }
    }
  }
  if (dist[to_node] == inf) return {};
  std::vector<std::size_t> path;
  for (std::size_t v = to_node; v != from_node; v = net.from_index(via[v])) path.push_back(via[v]);
  std::reverse(path.begin(), path.end());
  return path;
}

bool strongly_connected(const Network& net) {
  const std::size_t n = net.nodes().size();
  auto reach = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t li = 0; li < net.links().size(); ++li) {
      if (forward)
        adj[net.from_index(li)].push_back(net.to_index(li));
      else
        adj[net.to_index(li)].push_back(net.from_index(li));
    }
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    return count == n;
  };
  return reach(true) && reach(false);
}

}  // namespace parkdyn
