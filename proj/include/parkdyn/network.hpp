#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace parkdyn {

using NodeId = int;
using LinkId = int;
using LotId = int;

struct Node {
  NodeId id = 0;
  double x = 0.0;  // m
  double y = 0.0;  // m
  bool allows_u_turn = false;

  bool operator==(const Node&) const = default;
};

struct Link {
  LinkId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double length_km = 0.0;
  int lanes = 1;
  double free_flow_speed = 50.0;  // km/hr
  double jam_density = 100.0;     // veh/km/lane
  int parking_capacity = 0;       // spots
  double spot_spacing_km = 0.0;   // d_p

  bool operator==(const Link&) const = default;
};

struct OffStreetLot {
  LotId id = 0;
  LinkId entry_link = 0;
  int capacity = 0;              // N_off
  double circuit_length_km = 0;  // l_off
  double cruise_speed = 15.0;    // v_off_f, km/hr

  bool operator==(const OffStreetLot&) const = default;
};

/// Directed road graph with per-link parking supply. Immutable once built;
/// element order is the storage order and indices are stable.
class Network {
 public:
  Network() = default;

  /// Validates and indexes. Throws std::invalid_argument on any violated
  /// invariant (duplicate ids, dangling endpoints, non-positive length, ...).
  Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<OffStreetLot> lots,
          std::vector<int> link_regions);

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::span<const OffStreetLot> lots() const { return lots_; }

  const Node& node(std::size_t index) const { return nodes_[index]; }
  const Link& link(std::size_t index) const { return links_[index]; }

  std::size_t node_index(NodeId id) const;
  std::size_t link_index(LinkId id) const;

  /// Out-link indices of the node at `node_index`.
  std::span<const std::size_t> out_links(std::size_t node_index) const { return out_[node_index]; }
  std::size_t from_index(std::size_t link_index) const { return from_[link_index]; }
  std::size_t to_index(std::size_t link_index) const { return to_[link_index]; }

  /// Index of the link running opposite to `link_index`, if one exists.
  std::optional<std::size_t> reverse_link(std::size_t link_index) const;

  int region(std::size_t link_index) const { return regions_[link_index]; }
  std::span<const int> regions() const { return regions_; }
  int region_count() const;

  double total_length_km() const { return total_length_; }
  int total_parking_capacity() const { return total_capacity_; }

  /// Nodes with fewer than four neighbours; used as trip origins and exits.
  std::span<const std::size_t> boundary_nodes() const { return boundary_; }

  bool operator==(const Network& other) const {
    return nodes_ == other.nodes_ && links_ == other.links_ && lots_ == other.lots_ &&
           regions_ == other.regions_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<OffStreetLot> lots_;
  std::vector<int> regions_;

  std::unordered_map<NodeId, std::size_t> node_by_id_;
  std::unordered_map<LinkId, std::size_t> link_by_id_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::size_t> from_, to_;
  std::vector<std::size_t> boundary_;
  double total_length_ = 0.0;
  int total_capacity_ = 0;
};

/// Bidirectional rows x cols grid. Node (r, c) has id r*cols + c; the upper
/// half of the rows (r >= rows/2) is region 1, the rest region 0. A link
/// belongs to the region of its head node. `spot_spacing_km` <= 0 means
/// "spread evenly": length / capacity.
Network build_grid(int rows, int cols, double link_length_km, double free_flow_speed,
                   double jam_density, int parking_capacity_per_link, double spot_spacing_km);

/// Greenshields: max(0, v_f (1 - k / k_j)).
double greenshields_speed(double density, double free_flow_speed, double jam_density);

/// Free-flow travel time shortest path (link indices) from `from_node` to
/// `to_node`. `weight_jitter` (optional, one entry per link) multiplies each
/// link cost and is how callers break ties between equal-cost routes.
std::vector<std::size_t> shortest_path(const Network& net, std::size_t from_node,
                                       std::size_t to_node,
                                       std::span<const double> weight_jitter = {});

bool strongly_connected(const Network& net);

}  // namespace parkdyn
