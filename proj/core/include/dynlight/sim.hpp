#pragma once

#include <array>
#include <deque>
#include <optional>
#include <vector>

#include "dynlight/flow.hpp"
#include "dynlight/net.hpp"

namespace dynlight {

struct SimParams {
  double sat_rate = 1.0;         // discharge capacity, vehicles/s/movement
  int amber_s = 3;               // all-red clearance on phase change
  double vehicle_space_m = 7.0;  // storage per vehicle; lane cap = length/space
  /// Committed durations the engine accepts; empty means any >= 1 second.
  std::vector<int> duration_actions;
};

/// Per-lane snapshot: q queued (speed 0 at the stop region), x total,
/// x_seg counts per 100 m segment with x_seg[0] nearest the stop line and
/// the last segment absorbing everything farther out.
struct LaneObservation {
  int q = 0;
  int x = 0;
  std::array<int, 4> x_seg{};
};

struct SignalState {
  int current_phase = -1;  // index into the intersection's phase tuple
  int elapsed = 0;         // green seconds since the commitment started
  int committed_duration = 0;
  bool in_amber = false;
  int amber_remaining = 0;
};

struct IntersectionObservation {
  std::vector<int> lanes;  // incoming lane indices
  std::vector<LaneObservation> obs;
  SignalState signal;
};

struct TripRecord {
  int enter = 0;
  int exit = -1;  // -1 while in the network
};

/// Append-only episode log: one record per vehicle plus per-step
/// per-intersection queue sums.
struct TripLog {
  std::vector<TripRecord> trips;
  std::vector<std::vector<int>> queue_sums;
  bool undrained = false;
  int end_clock = 0;
};

struct DischargeEvent {
  int movement = -1;
  int vehicle = -1;
};

/// Optional per-step audit trail for invariant checks.
struct StepEvents {
  std::vector<DischargeEvent> discharges;
  std::vector<std::pair<int, int>> queue_joins;  // (lane, vehicle)
  std::vector<int> exits;                        // vehicle indices
};

/// Deterministic 1-second-step point-queue engine. Vehicles traverse their
/// route at the lane free-flow speed, pause queued at stop lines, and cross
/// on discharge slots granted per green movement (at most sat_rate per
/// second, FIFO per lane, blocked when the target lane is full or the
/// intersection is in amber). A vehicle released from a queue resumes the
/// following second, so an unobstructed crossing costs exactly one second
/// on top of free-flow travel.
class Sim {
 public:
  Sim(const Network& net, const FlowSet& flow, SimParams params = {});

  /// Advances one second: inject, move, discharge, advance signals.
  void step();

  int clock() const { return clock_; }

  /// Commits `phase` for `duration_s` green seconds. Switching phases
  /// inserts amber_s of all-red first; re-committing the current phase
  /// keeps the green uninterrupted.
  void set_phase(int intersection, int phase_index, int duration_s);

  /// True when the intersection has consumed its committed green (or has
  /// never been given a phase) and is not clearing amber.
  bool needs_decision(int intersection) const;

  const SignalState& signal(int intersection) const {
    return signals_.at(intersection);
  }

  LaneObservation observe_lane(int lane) const;
  std::vector<LaneObservation> observe_all() const;
  IntersectionObservation observe(int intersection) const;

  int scheduled_count() const { return scheduled_; }
  int exited_count() const { return exited_; }
  int pending_outside() const { return pending_; }
  int in_network() const { return scheduled_ - exited_ - pending_; }
  bool all_done() const {
    return scheduled_ == static_cast<int>(flow_->vehicles.size()) &&
           exited_ == scheduled_;
  }

  const TripLog& trip_log() const { return log_; }
  void finalize(bool undrained);
  bool finalized() const { return finalized_; }

  void record_events(bool on) { record_events_ = on; }
  const StepEvents& last_events() const { return events_; }

  const Network& network() const { return *net_; }
  const FlowSet& flow() const { return *flow_; }
  const SimParams& params() const { return params_; }

 private:
  struct VehicleRt {
    enum class Mode { Unentered, Pending, Running, Queued, Done };
    Mode mode = Mode::Unentered;
    int route_index = 0;
    double pos = 0.0;       // distance along the whole route
    double lane_end = 0.0;  // route distance where the current lane ends
    int queue_join_step = -1;
    int required_movement = -1;
  };

  struct LaneRt {
    std::deque<int> running;  // front = furthest along
    std::deque<int> queue;    // front = longest queued
    std::deque<int> backlog;  // scheduled vehicles waiting outside
    int cap = 0;
    int occupancy() const {
      return static_cast<int>(running.size() + queue.size());
    }
  };

  void inject();
  void move();
  void discharge();
  void advance_signals();
  int resolve_movement(int lane, int next_lane) const;
  void enter_lane(int vehicle, int lane);
  int discharge_budget() const;

  const Network* net_;
  const FlowSet* flow_;
  SimParams params_;
  std::vector<VehicleRt> vehicles_;
  std::vector<LaneRt> lane_rt_;
  std::vector<SignalState> signals_;
  TripLog log_;
  StepEvents events_;
  int clock_ = 0;
  size_t next_spec_ = 0;
  int scheduled_ = 0;
  int exited_ = 0;
  int pending_ = 0;
  bool finalized_ = false;
  bool record_events_ = false;
};

}  // namespace dynlight
