#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dynlight/common.hpp"

namespace dynlight {

enum class Dir { Left = 0, Straight = 1, Right = 2 };

const char* to_string(Dir d);
Dir dir_from_string(const std::string& s);

/// Lane kind relative to the lane's downstream end: a lane ending at an
/// intersection is Incoming (to it); a lane ending at the network boundary
/// is Outgoing (it only leaves its upstream intersection).
enum class LaneKind { Incoming = 0, Outgoing = 1 };

struct Lane {
  std::string id;
  double length = 0.0;  // meters
  int segment_count = 0;  // ceil(length / 100)
  LaneKind kind = LaneKind::Incoming;
  double free_flow_speed = 11.0;  // m/s
  int road = -1;
  int upstream_intersection = -1;    // -1 at a boundary entry
  int downstream_intersection = -1;  // -1 at a boundary exit
};

struct Road {
  std::string id;
  std::string from_node;
  std::string to_node;
  double length = 0.0;
  std::vector<int> lanes;
};

struct Movement {
  std::string id;
  int intersection = -1;
  int in_lane = -1;
  std::vector<int> out_lanes;  // nonempty
  Dir dir = Dir::Straight;
};

/// A set of non-conflicting movements shown green together. Labels run
/// A..D (4-phase) or A..H (8-phase); right turns are never members.
struct Phase {
  char label = 'A';
  std::vector<int> movements;  // global movement indices
};

struct Intersection {
  std::string id;
  std::vector<int> incoming_lanes;
  std::vector<int> outgoing_lanes;
  std::vector<int> movements;  // all movements crossing here
  std::vector<Phase> phases;   // fixed order, set at construction
  std::vector<int> signal_lanes;  // incoming lanes of non-right movements
};

/// Immutable road network: intersections, roads, lanes, movements and
/// per-intersection phase tables. Safe to share read-only across episodes.
class Network {
 public:
  const std::vector<Lane>& lanes() const { return lanes_; }
  const std::vector<Road>& roads() const { return roads_; }
  const std::vector<Intersection>& intersections() const { return intersections_; }
  const std::vector<Movement>& movements() const { return movements_; }

  const Lane& lane(int i) const { return lanes_.at(i); }
  const Road& road(int i) const { return roads_.at(i); }
  const Intersection& intersection(int i) const { return intersections_.at(i); }
  const Movement& movement(int i) const { return movements_.at(i); }

  int lane_index(const std::string& id) const;
  int road_index(const std::string& id) const;
  int intersection_index(const std::string& id) const;
  int movement_index(const std::string& id) const;

  /// Movements whose in-lane is `lane` (one per lane in generated grids).
  const std::vector<int>& movements_from_lane(int lane) const {
    return movements_from_lane_.at(lane);
  }

  const std::vector<int>& entry_lanes() const { return entry_lanes_; }
  const std::vector<int>& exit_lanes() const { return exit_lanes_; }
  /// Boundary-entry roads, each the start of some route.
  const std::vector<int>& entry_roads() const { return entry_roads_; }

  /// True when a movement connects `from` to `to`.
  bool lanes_connected(int from, int to) const;

  /// Incoming lanes permitted by a phase, in canonical order (movement
  /// direction, then lane id). `phase` indexes the intersection's tuple.
  std::vector<int> phase_lanes(int intersection, int phase) const;

  /// Checks every structural invariant; throws ValidationError naming the
  /// offending entity.
  void validate() const;

  /// Structural equality (ids, geometry, wiring); index layout must match,
  /// which holds for save/load round trips.
  bool structurally_equal(const Network& other) const;

  // Mutation is confined to builders/loaders; the network is immutable
  // once handed to a simulation.
  friend Network build_grid(int rows, int cols, double ew_length,
                            double ns_length, int phase_mode,
                            double free_flow_speed);
  friend Network load_roadnet(const std::string& path,
                              std::vector<std::string>* warnings);

 private:
  void index_ids();
  void derive_caches();

  std::vector<Lane> lanes_;
  std::vector<Road> roads_;
  std::vector<Intersection> intersections_;
  std::vector<Movement> movements_;
  std::unordered_map<std::string, int> lane_by_id_;
  std::unordered_map<std::string, int> road_by_id_;
  std::unordered_map<std::string, int> intersection_by_id_;
  std::unordered_map<std::string, int> movement_by_id_;
  std::vector<std::vector<int>> movements_from_lane_;
  std::vector<int> entry_lanes_;
  std::vector<int> exit_lanes_;
  std::vector<int> entry_roads_;
};

/// rows x cols four-way grid, 3 lanes per approach (left/straight/right),
/// east-west roads of `ew_length` meters, north-south roads of `ns_length`,
/// and 4- or 8-phase signal tables.
Network build_grid(int rows, int cols, double ew_length, double ns_length,
                   int phase_mode, double free_flow_speed = 11.0);

Network load_roadnet(const std::string& path,
                     std::vector<std::string>* warnings = nullptr);
void save_roadnet(const Network& net, const std::string& path);

}  // namespace dynlight
