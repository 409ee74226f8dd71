#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "parkdyn/network.hpp"

namespace parkdyn {

/// JSON document with top-level keys `units`, `nodes`, `links`, `lots`,
/// `regions`. Lengths in km, speeds in km/hr, densities in veh/km/lane.
nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

Network load_network(const std::filesystem::path& path);
void save_network(const Network& net, const std::filesystem::path& path);

}  // namespace parkdyn
