#include "dynlight/net.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace dynlight {

const char* to_string(Dir d) {
  switch (d) {
    case Dir::Left: return "left";
    case Dir::Straight: return "straight";
    case Dir::Right: return "right";
  }
  return "straight";
}

Dir dir_from_string(const std::string& s) {
  if (s == "left") return Dir::Left;
  if (s == "straight") return Dir::Straight;
  if (s == "right") return Dir::Right;
  throw FormatError("unknown movement direction '" + s + "'");
}

namespace {

int lookup(const std::unordered_map<std::string, int>& m, const std::string& id,
           const char* what) {
  auto it = m.find(id);
  if (it == m.end())
    throw InvalidArgument(std::string("unknown ") + what + " id '" + id + "'");
  return it->second;
}

}  // namespace

int Network::lane_index(const std::string& id) const {
  return lookup(lane_by_id_, id, "lane");
}
int Network::road_index(const std::string& id) const {
  return lookup(road_by_id_, id, "road");
}
int Network::intersection_index(const std::string& id) const {
  return lookup(intersection_by_id_, id, "intersection");
}
int Network::movement_index(const std::string& id) const {
  return lookup(movement_by_id_, id, "movement");
}

bool Network::lanes_connected(int from, int to) const {
  for (int m : movements_from_lane_.at(from)) {
    const auto& outs = movements_[m].out_lanes;
    if (std::find(outs.begin(), outs.end(), to) != outs.end()) return true;
  }
  return false;
}

std::vector<int> Network::phase_lanes(int intersection, int phase) const {
  const Intersection& inter = intersections_.at(intersection);
  if (phase < 0 || phase >= static_cast<int>(inter.phases.size()))
    throw InvalidArgument("phase index " + std::to_string(phase) +
                          " not in phase set of " + inter.id);
  std::vector<int> movs = inter.phases[phase].movements;
  std::sort(movs.begin(), movs.end(), [&](int a, int b) {
    const Movement& ma = movements_[a];
    const Movement& mb = movements_[b];
    if (ma.dir != mb.dir) return ma.dir < mb.dir;
    return lanes_[ma.in_lane].id < lanes_[mb.in_lane].id;
  });
  std::vector<int> out;
  for (int m : movs) {
    int l = movements_[m].in_lane;
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

void Network::index_ids() {
  lane_by_id_.clear();
  road_by_id_.clear();
  intersection_by_id_.clear();
  movement_by_id_.clear();
  for (size_t i = 0; i < lanes_.size(); ++i) {
    if (!lane_by_id_.emplace(lanes_[i].id, static_cast<int>(i)).second)
      throw ValidationError("duplicate lane id '" + lanes_[i].id + "'");
  }
  for (size_t i = 0; i < roads_.size(); ++i) {
    if (!road_by_id_.emplace(roads_[i].id, static_cast<int>(i)).second)
      throw ValidationError("duplicate road id '" + roads_[i].id + "'");
  }
  for (size_t i = 0; i < intersections_.size(); ++i) {
    if (!intersection_by_id_.emplace(intersections_[i].id, static_cast<int>(i))
             .second)
      throw ValidationError("duplicate intersection id '" +
                            intersections_[i].id + "'");
  }
  for (size_t i = 0; i < movements_.size(); ++i) {
    if (!movement_by_id_.emplace(movements_[i].id, static_cast<int>(i)).second)
      throw ValidationError("duplicate movement id '" + movements_[i].id + "'");
  }
}

void Network::derive_caches() {
  movements_from_lane_.assign(lanes_.size(), {});
  for (size_t m = 0; m < movements_.size(); ++m)
    movements_from_lane_[movements_[m].in_lane].push_back(static_cast<int>(m));

  entry_lanes_.clear();
  exit_lanes_.clear();
  entry_roads_.clear();
  for (size_t i = 0; i < lanes_.size(); ++i) {
    if (lanes_[i].upstream_intersection < 0)
      entry_lanes_.push_back(static_cast<int>(i));
    if (lanes_[i].downstream_intersection < 0)
      exit_lanes_.push_back(static_cast<int>(i));
  }
  for (size_t r = 0; r < roads_.size(); ++r) {
    if (!roads_[r].lanes.empty() &&
        lanes_[roads_[r].lanes[0]].upstream_intersection < 0)
      entry_roads_.push_back(static_cast<int>(r));
  }

  for (auto& inter : intersections_) {
    inter.signal_lanes.clear();
    for (int m : inter.movements) {
      if (movements_[m].dir == Dir::Right) continue;
      int l = movements_[m].in_lane;
      if (std::find(inter.signal_lanes.begin(), inter.signal_lanes.end(), l) ==
          inter.signal_lanes.end())
        inter.signal_lanes.push_back(l);
    }
  }
}

void Network::validate() const {
  for (const Lane& l : lanes_) {
    if (l.length <= 0)
      throw ValidationError("lane '" + l.id + "' has non-positive length");
    if (l.free_flow_speed <= 0)
      throw ValidationError("lane '" + l.id + "' has non-positive speed");
    if (l.segment_count != ceil_div(l.length, 100.0))
      throw ValidationError("lane '" + l.id + "' segment count mismatch");
    if (l.road < 0 || l.road >= static_cast<int>(roads_.size()))
      throw ValidationError("lane '" + l.id + "' belongs to no road");
    const auto& rl = roads_[l.road].lanes;
    int self = lane_index(l.id);
    if (std::count(rl.begin(), rl.end(), self) != 1)
      throw ValidationError("lane '" + l.id +
                            "' not listed exactly once on its road");
  }

  for (const Movement& m : movements_) {
    const Intersection& inter = intersections_.at(m.intersection);
    if (m.out_lanes.empty())
      throw ValidationError("movement '" + m.id + "' has no out lanes");
    const auto& in = inter.incoming_lanes;
    if (std::find(in.begin(), in.end(), m.in_lane) == in.end())
      throw ValidationError("movement '" + m.id +
                            "': in_lane '" + lanes_[m.in_lane].id +
                            "' is not an incoming lane of " + inter.id);
    for (int ol : m.out_lanes) {
      const auto& out = inter.outgoing_lanes;
      if (std::find(out.begin(), out.end(), ol) == out.end())
        throw ValidationError("movement '" + m.id + "': out_lane '" +
                              lanes_[ol].id + "' is not an outgoing lane of " +
                              inter.id);
    }
  }

  for (const Intersection& inter : intersections_) {
    std::unordered_map<int, int> phase_uses;
    for (const Phase& p : inter.phases) {
      if (p.movements.empty())
        throw ValidationError("phase " + std::string(1, p.label) + " of " +
                              inter.id + " is empty");
      for (int m : p.movements) {
        const auto& ms = inter.movements;
        if (std::find(ms.begin(), ms.end(), m) == ms.end())
          throw ValidationError("phase " + std::string(1, p.label) + " of " +
                                inter.id + " references a foreign movement");
        if (movements_[m].dir == Dir::Right)
          throw ValidationError("right-turn movement '" + movements_[m].id +
                                "' appears in phase " +
                                std::string(1, p.label));
        phase_uses[m] += 1;
      }
    }
    // 4-phase tables partition the signal movements, 8-phase tables cover
    // each exactly twice
    int want = inter.phases.size() == 8 ? 2 : inter.phases.size() == 4 ? 1 : -1;
    if (want > 0) {
      for (int m : inter.movements) {
        if (movements_[m].dir == Dir::Right) continue;
        if (phase_uses[m] != want)
          throw ValidationError("movement '" + movements_[m].id +
                                "' appears in " +
                                std::to_string(phase_uses[m]) +
                                " phases, expected " + std::to_string(want));
      }
    }
    for (int l : inter.incoming_lanes) {
      if (lanes_[l].downstream_intersection !=
          intersection_index(inter.id))
        throw ValidationError("lane '" + lanes_[l].id +
                              "' listed incoming at " + inter.id +
                              " but ends elsewhere");
    }
  }

  // non-boundary lanes must feed at least one movement
  for (size_t i = 0; i < lanes_.size(); ++i) {
    if (lanes_[i].downstream_intersection >= 0 &&
        movements_from_lane_[i].empty())
      throw ValidationError("lane '" + lanes_[i].id +
                            "' ends at an intersection but has no movement");
  }

  if (entry_lanes_.empty() || exit_lanes_.empty())
    throw ValidationError("network has no boundary entry/exit lanes");

  // connectivity over the undirected road graph
  if (!intersections_.empty()) {
    std::unordered_map<std::string, std::vector<std::string>> adj;
    for (const Road& r : roads_) {
      adj[r.from_node].push_back(r.to_node);
      adj[r.to_node].push_back(r.from_node);
    }
    std::set<std::string> seen;
    std::queue<std::string> q;
    q.push(intersections_[0].id);
    seen.insert(intersections_[0].id);
    while (!q.empty()) {
      std::string n = q.front();
      q.pop();
      for (const auto& nb : adj[n])
        if (seen.insert(nb).second) q.push(nb);
    }
    for (const Intersection& inter : intersections_)
      if (!seen.count(inter.id))
        throw ValidationError("intersection '" + inter.id +
                              "' unreachable: network not connected");
  }
}

bool Network::structurally_equal(const Network& other) const {
  auto lane_id = [](const Network& n, int i) { return n.lanes_[i].id; };
  if (lanes_.size() != other.lanes_.size() ||
      roads_.size() != other.roads_.size() ||
      intersections_.size() != other.intersections_.size() ||
      movements_.size() != other.movements_.size())
    return false;
  for (size_t i = 0; i < lanes_.size(); ++i) {
    const Lane &a = lanes_[i], &b = other.lanes_[i];
    if (a.id != b.id || a.length != b.length ||
        a.segment_count != b.segment_count || a.kind != b.kind ||
        a.free_flow_speed != b.free_flow_speed ||
        roads_[a.road].id != other.roads_[b.road].id)
      return false;
  }
  for (size_t i = 0; i < roads_.size(); ++i) {
    const Road &a = roads_[i], &b = other.roads_[i];
    if (a.id != b.id || a.from_node != b.from_node || a.to_node != b.to_node ||
        a.length != b.length || a.lanes.size() != b.lanes.size())
      return false;
    for (size_t k = 0; k < a.lanes.size(); ++k)
      if (lane_id(*this, a.lanes[k]) != lane_id(other, b.lanes[k]))
        return false;
  }
  for (size_t i = 0; i < movements_.size(); ++i) {
    const Movement &a = movements_[i], &b = other.movements_[i];
    if (a.id != b.id || a.dir != b.dir ||
        intersections_[a.intersection].id !=
            other.intersections_[b.intersection].id ||
        lane_id(*this, a.in_lane) != lane_id(other, b.in_lane) ||
        a.out_lanes.size() != b.out_lanes.size())
      return false;
    for (size_t k = 0; k < a.out_lanes.size(); ++k)
      if (lane_id(*this, a.out_lanes[k]) != lane_id(other, b.out_lanes[k]))
        return false;
  }
  for (size_t i = 0; i < intersections_.size(); ++i) {
    const Intersection &a = intersections_[i], &b = other.intersections_[i];
    if (a.id != b.id || a.phases.size() != b.phases.size()) return false;
    for (size_t p = 0; p < a.phases.size(); ++p) {
      if (a.phases[p].label != b.phases[p].label ||
          a.phases[p].movements.size() != b.phases[p].movements.size())
        return false;
      for (size_t k = 0; k < a.phases[p].movements.size(); ++k)
        if (movements_[a.phases[p].movements[k]].id !=
            other.movements_[b.phases[p].movements[k]].id)
          return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// grid builder

namespace {

enum Approach { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
const char kApproachChar[4] = {'N', 'E', 'S', 'W'};
const char kDirChar[3] = {'L', 'S', 'R'};

// side the movement leaves through, by approach and turn direction
// (right-hand traffic; approach names the side traffic comes from)
Approach exit_side(Approach a, Dir d) {
  switch (a) {
    case kNorth:
      return d == Dir::Straight ? kSouth : d == Dir::Left ? kEast : kWest;
    case kEast:
      return d == Dir::Straight ? kWest : d == Dir::Left ? kSouth : kNorth;
    case kSouth:
      return d == Dir::Straight ? kNorth : d == Dir::Left ? kWest : kEast;
    case kWest:
    default:
      return d == Dir::Straight ? kEast : d == Dir::Left ? kNorth : kSouth;
  }
}

}  // namespace

Network build_grid(int rows, int cols, double ew_length, double ns_length,
                   int phase_mode, double free_flow_speed) {
  if (rows < 1 || cols < 1)
    throw InvalidArgument("build_grid: rows and cols must be >= 1");
  if (ew_length <= 0 || ns_length <= 0)
    throw InvalidArgument("build_grid: road lengths must be positive");
  if (phase_mode != 4 && phase_mode != 8)
    throw InvalidArgument("build_grid: phase_mode must be 4 or 8");
  if (free_flow_speed <= 0)
    throw InvalidArgument("build_grid: free_flow_speed must be positive");

  Network net;

  auto inter_id = [](int r, int c) {
    return "i" + std::to_string(r) + "x" + std::to_string(c);
  };
  // neighbor node on a given side, boundary nodes where the grid ends
  auto side_node = [&](int r, int c, Approach a) -> std::string {
    switch (a) {
      case kNorth: return r == 0 ? "bN" + std::to_string(c) : inter_id(r - 1, c);
      case kSouth:
        return r == rows - 1 ? "bS" + std::to_string(c) : inter_id(r + 1, c);
      case kWest: return c == 0 ? "bW" + std::to_string(r) : inter_id(r, c - 1);
      case kEast:
      default:
        return c == cols - 1 ? "bE" + std::to_string(r) : inter_id(r, c + 1);
    }
  };

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Intersection inter;
      inter.id = inter_id(r, c);
      net.intersections_.push_back(std::move(inter));
    }

  auto add_road = [&](const std::string& from, const std::string& to,
                      double length) {
    Road road;
    road.id = "road_" + from + "_" + to;
    if (net.road_by_id_.count(road.id)) return;  // already built
    road.from_node = from;
    road.to_node = to;
    road.length = length;
    int ridx = static_cast<int>(net.roads_.size());
    for (int k = 0; k < 3; ++k) {
      Lane lane;
      lane.id = road.id + "_" + std::to_string(k);
      lane.length = length;
      lane.segment_count = ceil_div(length, 100.0);
      lane.free_flow_speed = free_flow_speed;
      lane.road = ridx;
      road.lanes.push_back(static_cast<int>(net.lanes_.size()));
      net.lanes_.push_back(std::move(lane));
    }
    net.road_by_id_.emplace(road.id, ridx);
    net.roads_.push_back(std::move(road));
  };

  // two directed roads per adjacency, including boundary stubs
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::string me = inter_id(r, c);
      for (Approach a : {kNorth, kEast, kSouth, kWest}) {
        double len = (a == kEast || a == kWest) ? ew_length : ns_length;
        add_road(side_node(r, c, a), me, len);
        add_road(me, side_node(r, c, a), len);
      }
    }

  // wire lane endpoints now that all roads exist
  net.index_ids();
  for (Road& road : net.roads_) {
    int up = net.intersection_by_id_.count(road.from_node)
                 ? net.intersection_by_id_[road.from_node]
                 : -1;
    int down = net.intersection_by_id_.count(road.to_node)
                   ? net.intersection_by_id_[road.to_node]
                   : -1;
    for (int l : road.lanes) {
      net.lanes_[l].upstream_intersection = up;
      net.lanes_[l].downstream_intersection = down;
      net.lanes_[l].kind = down >= 0 ? LaneKind::Incoming : LaneKind::Outgoing;
      if (down >= 0) net.intersections_[down].incoming_lanes.push_back(l);
      if (up >= 0) net.intersections_[up].outgoing_lanes.push_back(l);
    }
  }

  // movements: 12 per intersection, lane k serves direction k (0=L,1=S,2=R)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int ii = net.intersection_by_id_[inter_id(r, c)];
      Intersection& inter = net.intersections_[ii];
      std::unordered_map<std::string, int> mov_by_key;
      for (Approach a : {kNorth, kEast, kSouth, kWest}) {
        const Road& in_road =
            net.roads_[net.road_by_id_["road_" + side_node(r, c, a) + "_" +
                                       inter.id]];
        for (Dir d : {Dir::Left, Dir::Straight, Dir::Right}) {
          const Road& out_road =
              net.roads_[net.road_by_id_["road_" + inter.id + "_" +
                                         side_node(r, c, exit_side(a, d))]];
          Movement mov;
          mov.id = inter.id + "_" + kApproachChar[a] +
                   kDirChar[static_cast<int>(d)];
          mov.intersection = ii;
          mov.in_lane = in_road.lanes[static_cast<int>(d)];
          mov.out_lanes = out_road.lanes;
          mov.dir = d;
          int midx = static_cast<int>(net.movements_.size());
          mov_by_key[std::string(1, kApproachChar[a]) +
                     kDirChar[static_cast<int>(d)]] = midx;
          inter.movements.push_back(midx);
          net.movements_.push_back(std::move(mov));
        }
      }

      auto mv = [&](const char* key) { return mov_by_key.at(key); };
      std::vector<Phase> phases = {
          {'A', {mv("WS"), mv("ES")}},
          {'B', {mv("WL"), mv("EL")}},
          {'C', {mv("NS"), mv("SS")}},
          {'D', {mv("NL"), mv("SL")}},
      };
      if (phase_mode == 8) {
        phases.push_back({'E', {mv("WS"), mv("WL")}});
        phases.push_back({'F', {mv("ES"), mv("EL")}});
        phases.push_back({'G', {mv("NS"), mv("NL")}});
        phases.push_back({'H', {mv("SS"), mv("SL")}});
      }
      inter.phases = std::move(phases);
    }

  net.index_ids();
  net.derive_caches();
  net.validate();
  return net;
}

}  // namespace dynlight
