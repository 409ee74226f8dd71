#include "parkdyn/network_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json_fields.hpp"
#include "parkdyn/error.hpp"

namespace parkdyn {

namespace detail {

nlohmann::json parse_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ParseError(source + ":" + std::to_string(line) + ": " + e.what());
  }
}

nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

}  // namespace detail

using detail::field;
using detail::field_or;

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json doc;
  doc["units"] = {{"length", "km"},
                  {"position", "m"},
                  {"speed", "km/hr"},
                  {"jam_density", "veh/km/lane"},
                  {"capacity", "spots"}};
  auto& nodes = doc["nodes"] = nlohmann::json::array();
  for (const auto& n : net.nodes())
    nodes.push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}, {"allows_u_turn", n.allows_u_turn}});
  auto& links = doc["links"] = nlohmann::json::array();
  for (const auto& l : net.links())
    links.push_back({{"id", l.id},
                     {"from", l.from},
                     {"to", l.to},
                     {"length_km", l.length_km},
                     {"lanes", l.lanes},
                     {"free_flow_speed", l.free_flow_speed},
                     {"jam_density", l.jam_density},
                     {"parking_capacity", l.parking_capacity},
                     {"spot_spacing_km", l.spot_spacing_km}});
  auto& lots = doc["lots"] = nlohmann::json::array();
  for (const auto& lot : net.lots())
    lots.push_back({{"id", lot.id},
                    {"entry_link", lot.entry_link},
                    {"capacity", lot.capacity},
                    {"circuit_length_km", lot.circuit_length_km},
                    {"cruise_speed", lot.cruise_speed}});
  doc["regions"] = std::vector<int>(net.regions().begin(), net.regions().end());
  return doc;
}

Network network_from_json(const nlohmann::json& doc) {
  std::vector<Node> nodes;
  const auto& jn = detail::array_field(doc, "nodes", "network");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string p = "nodes[" + std::to_string(i) + "]";
    nodes.push_back({field<int>(jn[i], "id", p), field_or<double>(jn[i], "x", 0.0, p),
                     field_or<double>(jn[i], "y", 0.0, p),
                     field_or<bool>(jn[i], "allows_u_turn", false, p)});
  }
  std::vector<Link> links;
  const auto& jl = detail::array_field(doc, "links", "network");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string p = "links[" + std::to_string(i) + "]";
    Link l;
    l.id = field<int>(jl[i], "id", p);
    l.from = field<int>(jl[i], "from", p);
    l.to = field<int>(jl[i], "to", p);
    l.length_km = field<double>(jl[i], "length_km", p);
    l.lanes = field_or<int>(jl[i], "lanes", 1, p);
    l.free_flow_speed = field_or<double>(jl[i], "free_flow_speed", 50.0, p);
    l.jam_density = field_or<double>(jl[i], "jam_density", 100.0, p);
    l.parking_capacity = field_or<int>(jl[i], "parking_capacity", 0, p);
    const double even = l.parking_capacity > 0 ? l.length_km / l.parking_capacity : 0.0;
    l.spot_spacing_km = field_or<double>(jl[i], "spot_spacing_km", even, p);
    links.push_back(l);
  }
  std::vector<OffStreetLot> lots;
  const auto& jo = detail::array_field(doc, "lots", "network", false);
  for (std::size_t i = 0; i < jo.size(); ++i) {
    const std::string p = "lots[" + std::to_string(i) + "]";
    lots.push_back({field<int>(jo[i], "id", p), field<int>(jo[i], "entry_link", p),
                    field<int>(jo[i], "capacity", p),
                    field<double>(jo[i], "circuit_length_km", p),
                    field_or<double>(jo[i], "cruise_speed", 15.0, p)});
  }
  std::vector<int> regions = field_or<std::vector<int>>(doc, "regions", {}, "network");
  try {
    return Network(std::move(nodes), std::move(links), std::move(lots), std::move(regions));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
}

Network load_network(const std::filesystem::path& path) {
  const auto doc = detail::parse_file(path.string());
  try {
    return network_from_json(doc);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_network(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << network_to_json(net).dump(2) << '\n';
}

}  // namespace parkdyn
