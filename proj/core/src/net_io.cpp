#include <fstream>
#include <set>

#include <json.hpp>

#include "dynlight/net.hpp"

namespace dynlight {

using nlohmann::json;

namespace {

const std::set<std::string> kRootKeys = {"format",    "version", "intersections",
                                         "roads",     "lanes",   "movements",
                                         "phases"};
const std::set<std::string> kLaneKeys = {"id", "length", "free_flow_speed"};
const std::set<std::string> kRoadKeys = {"id", "from", "to", "length", "lanes"};
const std::set<std::string> kMovementKeys = {"id", "intersection", "in_lane",
                                             "out_lanes", "direction"};
const std::set<std::string> kPhaseKeys = {"intersection", "label", "movements"};
const std::set<std::string> kIntersectionKeys = {"id"};

// unknown fields are tolerated so newer files still load
void warn_unknown(const json& obj, const std::set<std::string>& known,
                  const std::string& where, std::vector<std::string>* warnings) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      if (warnings)
        warnings->push_back("ignoring unknown field '" + it.key() + "' in " +
                            where);
    }
  }
}

json require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key))
    throw FormatError("missing field '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

}  // namespace

Network load_roadnet(const std::string& path,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open roadnet file '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("roadnet '" + path + "': " + e.what());
  }
  if (!root.is_object())
    throw FormatError("roadnet '" + path + "': top level must be an object");
  warn_unknown(root, kRootKeys, "roadnet root", warnings);

  Network net;

  for (const auto& j : require(root, "lanes", "roadnet")) {
    warn_unknown(j, kLaneKeys, "lane record", warnings);
    Lane lane;
    lane.id = require(j, "id", "lane").get<std::string>();
    lane.length = require(j, "length", "lane '" + lane.id + "'").get<double>();
    lane.free_flow_speed = j.value("free_flow_speed", 11.0);
    lane.segment_count = ceil_div(lane.length, 100.0);
    net.lanes_.push_back(std::move(lane));
  }

  for (const auto& j : require(root, "intersections", "roadnet")) {
    warn_unknown(j, kIntersectionKeys, "intersection record", warnings);
    Intersection inter;
    inter.id = require(j, "id", "intersection").get<std::string>();
    net.intersections_.push_back(std::move(inter));
  }

  net.index_ids();  // lanes + intersections; roads/movements not yet present

  for (const auto& j : require(root, "roads", "roadnet")) {
    warn_unknown(j, kRoadKeys, "road record", warnings);
    Road road;
    road.id = require(j, "id", "road").get<std::string>();
    const std::string where = "road '" + road.id + "'";
    road.from_node = require(j, "from", where).get<std::string>();
    road.to_node = require(j, "to", where).get<std::string>();
    road.length = require(j, "length", where).get<double>();
    int ridx = static_cast<int>(net.roads_.size());
    for (const auto& lid : require(j, "lanes", where)) {
      int l = net.lane_index(lid.get<std::string>());
      if (net.lanes_[l].road >= 0)
        throw ValidationError("lane '" + net.lanes_[l].id +
                              "' assigned to two roads");
      net.lanes_[l].road = ridx;
      road.lanes.push_back(l);
    }
    net.roads_.push_back(std::move(road));
  }

  // resolve lane endpoints; nodes absent from intersections[] are boundary
  for (Road& road : net.roads_) {
    auto up = net.intersection_by_id_.find(road.from_node);
    auto down = net.intersection_by_id_.find(road.to_node);
    for (int l : road.lanes) {
      net.lanes_[l].upstream_intersection =
          up == net.intersection_by_id_.end() ? -1 : up->second;
      net.lanes_[l].downstream_intersection =
          down == net.intersection_by_id_.end() ? -1 : down->second;
      net.lanes_[l].kind = down == net.intersection_by_id_.end()
                               ? LaneKind::Outgoing
                               : LaneKind::Incoming;
      if (down != net.intersection_by_id_.end())
        net.intersections_[down->second].incoming_lanes.push_back(l);
      if (up != net.intersection_by_id_.end())
        net.intersections_[up->second].outgoing_lanes.push_back(l);
    }
  }

  for (const auto& j : require(root, "movements", "roadnet")) {
    warn_unknown(j, kMovementKeys, "movement record", warnings);
    Movement mov;
    mov.id = require(j, "id", "movement").get<std::string>();
    const std::string where = "movement '" + mov.id + "'";
    mov.intersection =
        net.intersection_index(require(j, "intersection", where).get<std::string>());
    mov.in_lane = net.lane_index(require(j, "in_lane", where).get<std::string>());
    for (const auto& lid : require(j, "out_lanes", where))
      mov.out_lanes.push_back(net.lane_index(lid.get<std::string>()));
    mov.dir = dir_from_string(require(j, "direction", where).get<std::string>());
    int midx = static_cast<int>(net.movements_.size());
    net.intersections_[mov.intersection].movements.push_back(midx);
    net.movements_.push_back(std::move(mov));
  }

  net.index_ids();

  for (const auto& j : require(root, "phases", "roadnet")) {
    warn_unknown(j, kPhaseKeys, "phase record", warnings);
    const std::string iid =
        require(j, "intersection", "phase").get<std::string>();
    Phase phase;
    const std::string label =
        require(j, "label", "phase of " + iid).get<std::string>();
    if (label.size() != 1 || label[0] < 'A' || label[0] > 'H')
      throw FormatError("phase label '" + label + "' of " + iid +
                        "' must be a letter A..H");
    phase.label = label[0];
    for (const auto& mid : require(j, "movements", "phase of " + iid))
      phase.movements.push_back(net.movement_index(mid.get<std::string>()));
    net.intersections_[net.intersection_index(iid)].phases.push_back(
        std::move(phase));
  }

  for (const Lane& l : net.lanes_)
    if (l.road < 0)
      throw ValidationError("lane '" + l.id + "' belongs to no road");

  net.derive_caches();
  net.validate();
  return net;
}

void save_roadnet(const Network& net, const std::string& path) {
  json root;
  root["format"] = "dynlight-roadnet";
  root["version"] = 1;

  json lanes = json::array();
  for (const Lane& l : net.lanes()) {
    lanes.push_back({{"id", l.id},
                     {"length", l.length},
                     {"free_flow_speed", l.free_flow_speed}});
  }
  root["lanes"] = std::move(lanes);

  json inters = json::array();
  for (const Intersection& i : net.intersections())
    inters.push_back({{"id", i.id}});
  root["intersections"] = std::move(inters);

  json roads = json::array();
  for (const Road& r : net.roads()) {
    json lane_ids = json::array();
    for (int l : r.lanes) lane_ids.push_back(net.lane(l).id);
    roads.push_back({{"id", r.id},
                     {"from", r.from_node},
                     {"to", r.to_node},
                     {"length", r.length},
                     {"lanes", std::move(lane_ids)}});
  }
  root["roads"] = std::move(roads);

  json movs = json::array();
  for (const Movement& m : net.movements()) {
    json outs = json::array();
    for (int l : m.out_lanes) outs.push_back(net.lane(l).id);
    movs.push_back({{"id", m.id},
                    {"intersection", net.intersection(m.intersection).id},
                    {"in_lane", net.lane(m.in_lane).id},
                    {"out_lanes", std::move(outs)},
                    {"direction", to_string(m.dir)}});
  }
  root["movements"] = std::move(movs);

  json phases = json::array();
  for (const Intersection& i : net.intersections()) {
    for (const Phase& p : i.phases) {
      json mids = json::array();
      for (int m : p.movements) mids.push_back(net.movement(m).id);
      phases.push_back({{"intersection", i.id},
                        {"label", std::string(1, p.label)},
                        {"movements", std::move(mids)}});
    }
  }
  root["phases"] = std::move(phases);

  std::ofstream out(path);
  if (!out) throw FormatError("cannot write roadnet file '" + path + "'");
  out << root.dump(2) << "\n";
}

}  // namespace dynlight
