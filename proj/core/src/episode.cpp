#include "dynlight/episode.hpp"

namespace dynlight {

int control_tick(Sim& sim, Controller& controller,
                 std::vector<DecisionRec>* log) {
  int issued = 0;
  const int n = static_cast<int>(sim.network().intersections().size());
  for (int i = 0; i < n; ++i) {
    if (!sim.needs_decision(i)) continue;
    Decision d = controller.decide(sim, i);
    sim.set_phase(i, d.phase, d.duration);
    if (log) log->push_back({sim.clock(), i, d.phase, d.duration});
    ++issued;
  }
  return issued;
}

EpisodeResult run_episode_on(Sim& sim, Controller& controller, int horizon_s,
                             bool drain, uint64_t seed,
                             EpisodeOptions options) {
  if (horizon_s <= 0) throw InvalidArgument("run_episode: horizon must be > 0");
  controller.reset(seed);

  EpisodeResult result;
  std::vector<DecisionRec>* dec_log =
      options.record_decisions ? &result.decisions : nullptr;

  while (sim.clock() < horizon_s) {
    control_tick(sim, controller, dec_log);
    sim.step();
    controller.on_step(sim);
  }

  bool undrained = false;
  if (drain) {
    const int cap = options.drain_cap_factor * horizon_s;
    while (!sim.all_done() && sim.clock() < cap) {
      control_tick(sim, controller, dec_log);
      sim.step();
      controller.on_step(sim);
    }
    undrained = !sim.all_done();
  }
  sim.finalize(undrained);

  const TripLog& log = sim.trip_log();
  result.adjusted_att = adjusted_att(log);
  result.throughput = sim.exited_count();
  result.vehicle_count = static_cast<int>(sim.flow().vehicles.size());
  result.undrained = undrained;
  result.end_clock = log.end_clock;
  result.queue_series.reserve(log.queue_sums.size());
  for (const auto& per_inter : log.queue_sums) {
    int total = 0;
    for (int q : per_inter) total += q;
    result.queue_series.push_back(total);
  }
  return result;
}

EpisodeResult run_episode(const Network& net, const FlowSet& flow,
                          Controller& controller, int horizon_s, bool drain,
                          uint64_t seed, SimParams params,
                          EpisodeOptions options) {
  // arrivals at or past the horizon are not part of the episode
  FlowSet sliced;
  const FlowSet* use = &flow;
  if (!flow.vehicles.empty() && flow.vehicles.back().enter_time >= horizon_s) {
    sliced.meta = flow.meta;
    for (const VehicleSpec& v : flow.vehicles)
      if (v.enter_time < horizon_s) sliced.vehicles.push_back(v);
    use = &sliced;
  }
  if (params.duration_actions.empty())
    params.duration_actions = controller.duration_actions();
  Sim sim(net, *use, params);
  return run_episode_on(sim, controller, horizon_s, drain, seed, options);
}

}  // namespace dynlight
