#include "parkdyn/event_log.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "parkdyn/error.hpp"

namespace parkdyn {

namespace {
constexpr std::array<std::string_view, 8> kNames{"entry", "i", "ii", "iii", "iv", "v", "vi",
                                                 "exited"};
}

std::string_view family_name(Family f) { return kNames[static_cast<std::size_t>(f)]; }

Family family_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Family>(i);
  throw ParseError("unknown family '" + std::string(name) + "'");
}

bool transition_allowed(Family from, Family to) {
  using F = Family;
  switch (from) {
    case F::Entry: return to == F::MovingOn || to == F::MovingOff || to == F::Transit;
    case F::MovingOn: return to == F::Cruising || to == F::ParkedOn;
    case F::MovingOff: return to == F::Cruising || to == F::ParkedOff;
    case F::Cruising: return to == F::ParkedOn;
    case F::ParkedOn:
    case F::ParkedOff: return to == F::Transit;
    case F::Transit: return to == F::Exited;
    case F::Exited: return false;
  }
  return false;
}

void write_events_csv(const ParkingEventLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "vehicle_id,t_s,from_family,to_family,link_id,dist_km,occ_on,occ_off\n";
  for (const auto& e : log.events) {
    out << e.vehicle_id << ',' << e.t_s << ',' << family_name(e.from) << ','
        << family_name(e.to) << ',';
    if (e.lot_id >= 0)
      out << "lot" << e.lot_id;
    else
      out << e.link_id;
    out << ',' << e.dist_km << ',' << e.occ_on << ',' << e.occ_off << '\n';
  }
}

std::vector<ParkingEvent> read_events_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  std::vector<ParkingEvent> events;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cols.size() != 8) throw ParseError(where + ": expected 8 columns");
    try {
      ParkingEvent e;
      e.vehicle_id = std::stoi(cols[0]);
      e.t_s = std::stod(cols[1]);
      e.from = family_from_name(cols[2]);
      e.to = family_from_name(cols[3]);
      if (cols[4].rfind("lot", 0) == 0)
        e.lot_id = std::stoi(cols[4].substr(3));
      else
        e.link_id = std::stoi(cols[4]);
      e.dist_km = std::stod(cols[5]);
      e.occ_on = std::stod(cols[6]);
      e.occ_off = std::stod(cols[7]);
      events.push_back(e);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw ParseError(where + ": bad number (" + e.what() + ")");
    }
  }
  return events;
}

}  // namespace parkdyn
