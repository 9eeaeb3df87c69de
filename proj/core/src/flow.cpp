#include "dynlight/flow.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace dynlight {

using nlohmann::json;

bool FlowSet::operator==(const FlowSet& other) const {
  if (vehicles.size() != other.vehicles.size()) return false;
  for (size_t i = 0; i < vehicles.size(); ++i) {
    const VehicleSpec &a = vehicles[i], &b = other.vehicles[i];
    if (a.id != b.id || a.enter_time != b.enter_time || a.route != b.route)
      return false;
  }
  return meta.source == other.meta.source && meta.rate == other.meta.rate;
}

namespace {

// lane on `road` whose movement turns `dir` at the downstream intersection;
// exit roads have no downstream turn, so the walk parks on the straight lane
int lane_for_dir(const Network& net, int road, Dir dir) {
  for (int l : net.road(road).lanes) {
    for (int m : net.movements_from_lane(l))
      if (net.movement(m).dir == dir) return l;
  }
  return net.road(road).lanes.at(
      std::min<size_t>(1, net.road(road).lanes.size() - 1));
}

Dir sample_dir(Rng& rng, const TurnRatios& ratios,
               const std::vector<bool>& available) {
  std::vector<double> w = {ratios.left, ratios.straight, ratios.right};
  for (int d = 0; d < 3; ++d)
    if (!available[d]) w[d] = 0.0;
  return static_cast<Dir>(rng.pick_weighted(w));
}

}  // namespace

FlowSet gen_poisson_flow(const Network& net, double rate, int horizon_s,
                         uint64_t seed, TurnRatios ratios,
                         std::vector<double> entry_weights) {
  if (rate <= 0) throw InvalidArgument("gen_poisson_flow: rate must be > 0");
  if (horizon_s < 0)
    throw InvalidArgument("gen_poisson_flow: horizon must be >= 0");
  if (net.entry_roads().empty())
    throw InvalidArgument("gen_poisson_flow: network has no boundary lanes");
  if (!entry_weights.empty() &&
      entry_weights.size() != net.entry_roads().size())
    throw InvalidArgument(
        "gen_poisson_flow: entry_weights must align with entry_roads");

  FlowSet flow;
  flow.meta.source = "poisson";
  flow.meta.rate = rate;

  Rng rng(seed);
  double t = rng.exponential(rate);
  int serial = 0;
  while (t < horizon_s) {
    VehicleSpec v;
    v.id = "v" + std::to_string(serial++);
    v.enter_time = static_cast<int>(t);

    int road = entry_weights.empty()
                   ? net.entry_roads()[rng.uniform_int(
                         static_cast<int64_t>(net.entry_roads().size()))]
                   : net.entry_roads()[rng.pick_weighted(entry_weights)];
    while (true) {
      // which turns exist off this road
      std::vector<bool> avail(3, false);
      for (int l : net.road(road).lanes)
        for (int m : net.movements_from_lane(l))
          avail[static_cast<int>(net.movement(m).dir)] = true;
      bool has_any = avail[0] || avail[1] || avail[2];
      if (!has_any) {  // boundary exit road, walk ends
        v.route.push_back(lane_for_dir(net, road, Dir::Straight));
        break;
      }
      Dir dir = sample_dir(rng, ratios, avail);
      int lane = lane_for_dir(net, road, dir);
      v.route.push_back(lane);
      const Movement& mov = net.movement(net.movements_from_lane(lane)[0]);
      road = net.lane(mov.out_lanes[0]).road;
    }
    flow.vehicles.push_back(std::move(v));
    t += rng.exponential(rate);
  }

  std::stable_sort(flow.vehicles.begin(), flow.vehicles.end(),
                   [](const VehicleSpec& a, const VehicleSpec& b) {
                     return a.enter_time < b.enter_time;
                   });
  return flow;
}

void validate_flow(const FlowSet& flow, const Network& net) {
  std::set<std::string> ids;
  int prev_enter = 0;
  for (const VehicleSpec& v : flow.vehicles) {
    if (!ids.insert(v.id).second)
      throw ValidationError("duplicate vehicle id '" + v.id + "'");
    if (v.enter_time < 0)
      throw ValidationError("vehicle '" + v.id + "' has negative enter time");
    if (v.enter_time < prev_enter)
      throw ValidationError("flow not sorted by enter time at vehicle '" +
                            v.id + "'");
    prev_enter = v.enter_time;
    if (v.route.empty())
      throw ValidationError("vehicle '" + v.id + "' has an empty route");
    if (net.lane(v.route.front()).upstream_intersection >= 0)
      throw ValidationError("vehicle '" + v.id +
                            "' does not start on a boundary entry lane");
    if (net.lane(v.route.back()).downstream_intersection >= 0)
      throw ValidationError("vehicle '" + v.id +
                            "' does not end on a boundary exit lane");
    for (size_t i = 0; i + 1 < v.route.size(); ++i) {
      if (!net.lanes_connected(v.route[i], v.route[i + 1]))
        throw ValidationError(
            "vehicle '" + v.id + "': no movement connects lane '" +
            net.lane(v.route[i]).id + "' to lane '" +
            net.lane(v.route[i + 1]).id + "'");
    }
  }
}

FlowSet load_flow(const std::string& path, const Network& net,
                  std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open flow file '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
    if (warnings) warnings->push_back("flow file '" + path + "' is empty");
    return FlowSet{};
  }
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& e) {
    throw FormatError("flow '" + path + "': " + e.what());
  }

  FlowSet flow;
  if (root.contains("meta")) {
    flow.meta.source = root["meta"].value("source", "");
    flow.meta.rate = root["meta"].value("rate", 0.0);
  }
  if (!root.contains("vehicles"))
    throw FormatError("flow '" + path + "': missing 'vehicles' array");
  for (const auto& j : root["vehicles"]) {
    VehicleSpec v;
    if (!j.contains("id") || !j.contains("enter") || !j.contains("route"))
      throw FormatError("flow '" + path +
                        "': vehicle record needs id/enter/route");
    v.id = j["id"].get<std::string>();
    v.enter_time = j["enter"].get<int>();
    for (const auto& lid : j["route"])
      v.route.push_back(net.lane_index(lid.get<std::string>()));
    flow.vehicles.push_back(std::move(v));
  }
  if (flow.vehicles.empty() && warnings)
    warnings->push_back("flow file '" + path + "' lists no vehicles");
  validate_flow(flow, net);
  return flow;
}

void save_flow(const FlowSet& flow, const Network& net,
               const std::string& path) {
  json root;
  root["meta"] = {{"source", flow.meta.source}, {"rate", flow.meta.rate}};
  json vehicles = json::array();
  for (const VehicleSpec& v : flow.vehicles) {
    json route = json::array();
    for (int l : v.route) route.push_back(net.lane(l).id);
    vehicles.push_back(
        {{"id", v.id}, {"enter", v.enter_time}, {"route", std::move(route)}});
  }
  root["vehicles"] = std::move(vehicles);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write flow file '" + path + "'");
  out << root.dump(2) << "\n";
}

}  // namespace dynlight
