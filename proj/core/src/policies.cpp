#include "dynlight/policies.hpp"

namespace dynlight {

double movement_pressure(std::span<const LaneObservation> obs,
                         const Network& net, int movement) {
  const Movement& mov = net.movement(movement);
  double down = 0;
  for (int l : mov.out_lanes) down += obs[l].q;
  down /= static_cast<double>(mov.out_lanes.size());
  return obs[mov.in_lane].q - down;
}

namespace {

template <typename ScoreFn>
PhaseDecision argmax_phase(const Network& net, int intersection,
                           ScoreFn&& score) {
  const Intersection& inter = net.intersection(intersection);
  PhaseDecision best;
  for (int p = 0; p < static_cast<int>(inter.phases.size()); ++p) {
    double s = score(p);
    if (!best.score || s > *best.score) {
      best.phase = p;
      best.score = s;
    }
  }
  return best;
}

}  // namespace

PhaseDecision max_queue_length(std::span<const LaneObservation> obs,
                               const Network& net, int intersection) {
  return argmax_phase(net, intersection, [&](int p) {
    double total = 0;
    for (int l : net.phase_lanes(intersection, p)) total += obs[l].q;
    return total;
  });
}

PhaseDecision efficient_max_pressure(std::span<const LaneObservation> obs,
                                     const Network& net, int intersection) {
  return argmax_phase(net, intersection, [&](int p) {
    double total = 0;
    for (int m : net.intersection(intersection).phases[p].movements)
      total += movement_pressure(obs, net, m);
    return total;
  });
}

CyclePlan default_cycle_plan(const Network& net, int intersection,
                             int seconds_per_phase) {
  CyclePlan plan;
  const auto& phases = net.intersection(intersection).phases;
  for (int p = 0; p < static_cast<int>(phases.size()); ++p)
    plan.slots.emplace_back(p, seconds_per_phase);
  return plan;
}

PhaseDecision fixed_time(const CyclePlan& plan, int clock) {
  if (plan.slots.empty())
    throw InvalidArgument("fixed_time: empty cycle plan");
  int t = clock % plan.total();
  for (const auto& [phase, secs] : plan.slots) {
    if (t < secs) return {phase, std::nullopt};
    t -= secs;
  }
  return {plan.slots.back().first, std::nullopt};  // unreachable
}

PhaseDecision cyclical_next(CyclicalCursor& cursor, const Network& net,
                            int intersection) {
  const int n =
      static_cast<int>(net.intersection(intersection).phases.size());
  int& idx = cursor.index.at(intersection);
  PhaseDecision d{idx, std::nullopt};
  idx = (idx + 1) % n;
  return d;
}

void FixedTimeController::reset(uint64_t) { green_clock_.clear(); }

Decision FixedTimeController::decide(const Sim& sim, int intersection) {
  if (green_clock_.empty())
    green_clock_.assign(sim.network().intersections().size(), 0);
  CyclePlan plan =
      default_cycle_plan(sim.network(), intersection, seconds_per_phase_);
  int& clock = green_clock_.at(intersection);
  PhaseDecision d = fixed_time(plan, clock);
  clock += seconds_per_phase_;
  return {d.phase, seconds_per_phase_};
}

Decision MqlController::decide(const Sim& sim, int intersection) {
  auto obs = sim.observe_all();
  PhaseDecision d = max_queue_length(obs, sim.network(), intersection);
  return {d.phase, duration_s_};
}

Decision EmpController::decide(const Sim& sim, int intersection) {
  auto obs = sim.observe_all();
  PhaseDecision d = efficient_max_pressure(obs, sim.network(), intersection);
  return {d.phase, duration_s_};
}

}  // namespace dynlight
