#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "parkdyn/error.hpp"
#include "parkdyn/network.hpp"
#include "parkdyn/network_io.hpp"

using namespace parkdyn;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("parkdyn_test_" + name);
}

nlohmann::json small_doc() {
  return network_to_json(build_grid(2, 2, 0.1, 50, 100, 10, 0.005));
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("2x2 grid counts") {
  const auto net = build_grid(2, 2, 0.1, 50, 100, 10, 0.005);
  CHECK(net.nodes().size() == 4);
  CHECK(net.links().size() == 8);
  CHECK(net.total_length_km() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(net.total_parking_capacity() == 80);
}

TEST_CASE("4x4 grid has 48 directed links") {
  const auto net = build_grid(4, 4, 0.2, 50, 100, 3, 0.0);
  CHECK(net.nodes().size() == 16);
  CHECK(net.links().size() == 48);
  // interior nodes have four out-links
  for (int r = 1; r < 3; ++r)
    for (int c = 1; c < 3; ++c) CHECK(net.out_links(net.node_index(r * 4 + c)).size() == 4);
}

TEST_CASE("grid rejects degenerate dimensions and parameters") {
  CHECK_THROWS_AS(build_grid(1, 2, 0.1, 50, 100, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 0, 0.1, 50, 100, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 2, 0.0, 50, 100, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(2, 2, 0.1, -5, 100, 1, 0.0), std::invalid_argument);
  // 10 spots 0.02 km apart do not fit on 0.1 km
  CHECK_THROWS_AS(build_grid(2, 2, 0.1, 50, 100, 10, 0.02), std::invalid_argument);
}

TEST_CASE("even spacing default") {
  const auto net = build_grid(3, 3, 0.2, 50, 100, 4, 0.0);
  for (const auto& l : net.links()) CHECK(l.spot_spacing_km == doctest::Approx(0.05));
}

TEST_CASE("regions split the rows in halves") {
  const auto net = build_grid(4, 3, 0.1, 50, 100, 1, 0.0);
  CHECK(net.region_count() == 2);
  for (std::size_t l = 0; l < net.links().size(); ++l) {
    const auto head = net.link(l).to;
    CHECK(net.region(l) == (head / 3 >= 2 ? 1 : 0));
  }
}

TEST_CASE("greenshields values") {
  CHECK(greenshields_speed(0, 50, 100) == 50.0);
  CHECK(greenshields_speed(100, 50, 100) == 0.0);
  CHECK(greenshields_speed(40, 50, 100) == doctest::Approx(30.0));
  CHECK(greenshields_speed(150, 50, 100) == 0.0);
}

TEST_CASE("property: greenshields is non-increasing and bounded") {
  testing::Gen g(101);
  for (int i = 0; i < 2000; ++i) {
    const double vf = g.uniform(1, 120), kj = g.uniform(10, 200);
    const double a = g.uniform(0, 1.5 * kj), b = g.uniform(0, 1.5 * kj);
    const double va = greenshields_speed(std::min(a, b), vf, kj);
    const double vb = greenshields_speed(std::max(a, b), vf, kj);
    CHECK(va >= vb);
    CHECK(va <= vf);
    CHECK(vb >= 0.0);
  }
}

TEST_CASE("property: grids are strongly connected") {
  testing::Gen g(7);
  for (int i = 0; i < 40; ++i) {
    const int rows = g.integer(2, 9), cols = g.integer(2, 9);
    const auto net = build_grid(rows, cols, g.uniform(0.05, 0.5), 50, 100, g.integer(0, 3), 0.0);
    CHECK(strongly_connected(net));
    CHECK(net.links().size() == std::size_t(2 * (rows * (cols - 1) + cols * (rows - 1))));
  }
}

TEST_CASE("shortest path follows Manhattan distance on a uniform grid") {
  const auto net = build_grid(5, 5, 0.1, 50, 100, 1, 0.0);
  const auto path = shortest_path(net, net.node_index(0), net.node_index(24));
  CHECK(path.size() == 8);
  std::size_t at = net.node_index(0);
  for (auto l : path) {
    CHECK(net.from_index(l) == at);
    at = net.to_index(l);
  }
  CHECK(at == net.node_index(24));
  CHECK(shortest_path(net, 3, 3).empty());
}

TEST_CASE("boundary nodes are the grid rim") {
  const auto net = build_grid(4, 4, 0.1, 50, 100, 1, 0.0);
  CHECK(net.boundary_nodes().size() == 12);
}

TEST_CASE("reverse links pair up") {
  const auto net = build_grid(3, 3, 0.1, 50, 100, 1, 0.0);
  for (std::size_t l = 0; l < net.links().size(); ++l) {
    const auto r = net.reverse_link(l);
    REQUIRE(r.has_value());
    CHECK(net.from_index(*r) == net.to_index(l));
    CHECK(net.to_index(*r) == net.from_index(l));
  }
}

TEST_CASE("network constructor validation") {
  std::vector<Node> nodes{{1, 0, 0, false}, {2, 100, 0, false}};
  std::vector<Link> links{{10, 1, 2, 0.1, 1, 50, 100, 0, 0}};
  CHECK_NOTHROW(Network(nodes, links, {}, {0}));
  auto dup = nodes;
  dup[1].id = 1;
  CHECK_THROWS_AS(Network(dup, links, {}, {0}), std::invalid_argument);
  auto dangling = links;
  dangling[0].to = 9;
  CHECK_THROWS_AS(Network(nodes, dangling, {}, {0}), std::invalid_argument);
  auto zero = links;
  zero[0].length_km = 0.0;
  CHECK_THROWS_AS(Network(nodes, zero, {}, {0}), std::invalid_argument);
  auto lanes = links;
  lanes[0].lanes = 0;
  CHECK_THROWS_AS(Network(nodes, lanes, {}, {0}), std::invalid_argument);
  std::vector<OffStreetLot> bad_lot{{1, 99, 10, 0.3, 15}};
  CHECK_THROWS_AS(Network(nodes, links, bad_lot, {0}), std::invalid_argument);
}

TEST_CASE("save then load is lossless") {
  auto net = build_grid(2, 2, 0.1, 50, 100, 10, 0.005);
  const auto path = temp_file("grid.json");
  save_network(net, path);
  CHECK(load_network(path) == net);

  std::vector<Node> nodes = {{1, 0, 0, true}, {2, 123.5, -7.25, false}};
  std::vector<Link> links = {{5, 1, 2, 0.1234567890123, 2, 47.5, 133.3, 3, 0.01},
                             {6, 2, 1, 0.3, 1, 30, 90, 0, 0}};
  std::vector<OffStreetLot> lots = {{3, 6, 42, 0.25, 12.5}};
  Network custom(nodes, links, lots, {1, 0});
  save_network(custom, path);
  CHECK(load_network(path) == custom);
  std::filesystem::remove(path);
}

TEST_CASE("property: random grids survive a json round trip") {
  testing::Gen g(2024);
  for (int i = 0; i < 20; ++i) {
    const auto net = build_grid(g.integer(2, 6), g.integer(2, 6), g.uniform(0.05, 0.4),
                                g.uniform(20, 70), g.uniform(50, 150), g.integer(0, 4), 0.0);
    CHECK(network_from_json(network_to_json(net)) == net);
  }
}

TEST_CASE("malformed network files") {
  SUBCASE("dangling node reference") {
    auto doc = small_doc();
    doc["links"][0]["to"] = 999;
    CHECK_THROWS_AS(network_from_json(doc), ParseError);
  }
  SUBCASE("zero length") {
    auto doc = small_doc();
    doc["links"][2]["length_km"] = 0.0;
    try {
      network_from_json(doc);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("length") != std::string::npos);
    }
  }
  SUBCASE("missing field names the path") {
    auto doc = small_doc();
    doc["links"][3].erase("length_km");
    try {
      network_from_json(doc);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("links[3]") != std::string::npos);
    }
  }
  SUBCASE("wrong type") {
    auto doc = small_doc();
    doc["links"][1]["free_flow_speed"] = "fast";
    CHECK_THROWS_AS(network_from_json(doc), ParseError);
  }
  SUBCASE("syntax error reports a line") {
    const auto path = temp_file("broken.json");
    {
      std::ofstream out(path);
      out << "{\n  \"nodes\": [\n    {\"id\": 1,,}\n  ]\n}\n";
    }
    try {
      load_network(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    std::filesystem::remove(path);
  }
}

}  // TEST_SUITE
