#pragma once

#include "dynlight/metrics.hpp"
#include "dynlight/sim.hpp"

namespace dynlight {

struct Decision {
  int phase = 0;     // index into the intersection's phase tuple
  int duration = 0;  // committed green seconds
};

/// Signal controller: queried independently per intersection whenever its
/// committed green has elapsed (and once at episode start).
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(uint64_t /*seed*/) {}
  virtual Decision decide(const Sim& sim, int intersection) = 0;
  /// Durations this controller may commit; the episode runner installs them
  /// as the engine's action set. Empty leaves the engine unconstrained.
  virtual std::vector<int> duration_actions() const { return {}; }
  /// Called after every engine step (training hook).
  virtual void on_step(Sim& /*sim*/) {}
};

/// Issues one decision per intersection whose countdown expired; returns
/// how many were issued. Intersections run on independent clocks.
int control_tick(Sim& sim, Controller& controller,
                 std::vector<DecisionRec>* log = nullptr);

struct EpisodeOptions {
  bool record_decisions = false;
  int drain_cap_factor = 4;  // drain stops at factor * horizon
};

/// Steps the simulation to `horizon_s`; with drain on, keeps stepping (no
/// new arrivals exist past the horizon) until every scheduled vehicle
/// exits or the drain cap is hit, in which case the result is flagged
/// undrained. Bit-deterministic for fixed inputs and seed.
EpisodeResult run_episode(const Network& net, const FlowSet& flow,
                          Controller& controller, int horizon_s, bool drain,
                          uint64_t seed, SimParams params = {},
                          EpisodeOptions options = {});

/// Same, but exposes the finished Sim for callers that inspect state.
EpisodeResult run_episode_on(Sim& sim, Controller& controller, int horizon_s,
                             bool drain, uint64_t seed,
                             EpisodeOptions options = {});

}  // namespace dynlight
