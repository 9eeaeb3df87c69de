#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dynlight/episode.hpp"
#include "dynlight/net.hpp"
#include "dynlight/sim.hpp"

namespace dynlight {

struct PhaseDecision {
  int phase = 0;                 // index into the intersection's phase tuple
  std::optional<double> score;   // absent for schedule-driven policies
};

/// Queue-length difference between a movement's in-lane and the mean of
/// its out-lanes.
double movement_pressure(std::span<const LaneObservation> obs,
                         const Network& net, int movement);

/// Phase with the largest total queue over its permitted in-lanes; ties go
/// to the lowest phase index. `obs` is indexed by global lane index.
PhaseDecision max_queue_length(std::span<const LaneObservation> obs,
                               const Network& net, int intersection);

/// Phase with the largest total movement pressure; same tie-break.
PhaseDecision efficient_max_pressure(std::span<const LaneObservation> obs,
                                     const Network& net, int intersection);

struct CyclePlan {
  std::vector<std::pair<int, int>> slots;  // (phase index, green seconds)
  int total() const {
    int t = 0;
    for (auto& s : slots) t += s.second;
    return t;
  }
};

/// Equal 15-second splits over the intersection's phase tuple.
CyclePlan default_cycle_plan(const Network& net, int intersection,
                             int seconds_per_phase = 15);

/// Schedule lookup: the phase holding green at `clock` (green seconds,
/// modulo the plan's cycle length).
PhaseDecision fixed_time(const CyclePlan& plan, int clock);

struct CyclicalCursor {
  std::vector<int> index;  // per intersection, next phase to actuate
};

/// Returns the cursor's phase and advances it modulo the tuple size.
PhaseDecision cyclical_next(CyclicalCursor& cursor, const Network& net,
                            int intersection);

// --- controllers over the pure policies ---

/// Pre-timed control: fixed cycle, fixed splits, phases in tuple order.
class FixedTimeController : public Controller {
 public:
  explicit FixedTimeController(int seconds_per_phase = 15)
      : seconds_per_phase_(seconds_per_phase) {}
  void reset(uint64_t) override;
  Decision decide(const Sim& sim, int intersection) override;
  std::vector<int> duration_actions() const override {
    return {seconds_per_phase_};
  }

 private:
  int seconds_per_phase_;
  std::vector<int> green_clock_;  // cumulative committed green, per agent
};

/// Max-QueueLength phase choice with a fixed green duration.
class MqlController : public Controller {
 public:
  explicit MqlController(int duration_s = 15) : duration_s_(duration_s) {}
  Decision decide(const Sim& sim, int intersection) override;
  std::vector<int> duration_actions() const override { return {duration_s_}; }

 private:
  int duration_s_;
};

/// Efficient-MaxPressure phase choice with a fixed green duration.
class EmpController : public Controller {
 public:
  explicit EmpController(int duration_s = 15) : duration_s_(duration_s) {}
  Decision decide(const Sim& sim, int intersection) override;
  std::vector<int> duration_actions() const override { return {duration_s_}; }

 private:
  int duration_s_;
};

}  // namespace dynlight
