#include <doctest.h>

#include <cmath>
#include <map>

#include "dynlight/episode.hpp"
#include "dynlight/policies.hpp"
#include "dynlight/sim.hpp"
#include "helpers.hpp"

using namespace dynlight;

namespace {

// pins one phase forever with an unconstrained engine
class PinnedPhase : public Controller {
 public:
  explicit PinnedPhase(int phase, int duration = 1000000)
      : phase_(phase), duration_(duration) {}
  Decision decide(const Sim&, int) override { return {phase_, duration_}; }

 private:
  int phase_, duration_;
};

// straight west->east crossing at every intersection of a 1xN grid
FlowSet straight_flow(const Network& net, int count, int gap,
                      const std::string& entry_lane_id) {
  FlowSet flow;
  flow.meta.source = "manual";
  int entry = net.lane_index(entry_lane_id);
  for (int i = 0; i < count; ++i) {
    VehicleSpec v;
    v.id = "m" + std::to_string(i);
    v.enter_time = i * gap;
    int lane = entry;
    v.route.push_back(lane);
    while (net.lane(v.route.back()).downstream_intersection >= 0) {
      const Movement* straight = nullptr;
      for (int m : net.movements_from_lane(v.route.back()))
        if (net.movement(m).dir == Dir::Straight) straight = &net.movement(m);
      REQUIRE(straight != nullptr);
      v.route.push_back(straight->out_lanes[1]);
    }
    flow.vehicles.push_back(std::move(v));
  }
  return flow;
}

int phase_of_movement(const Network& net, int intersection,
                      const std::string& movement_id) {
  int mi = net.movement_index(movement_id);
  const auto& phases = net.intersection(intersection).phases;
  for (int p = 0; p < (int)phases.size(); ++p)
    for (int m : phases[p].movements)
      if (m == mi) return p;
  REQUIRE(false);
  return -1;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("empty flow stays empty") {
  Network net = build_grid(2, 2, 300, 300, 4);
  FlowSet flow;
  SimParams params;
  params.duration_actions = {15};
  Sim sim(net, flow, params);
  MqlController mql(15);
  for (int t = 0; t < 100; ++t) {
    control_tick(sim, mql);
    sim.step();
  }
  CHECK(sim.exited_count() == 0);
  CHECK(sim.in_network() == 0);
  for (const auto& obs : sim.observe_all()) {
    CHECK(obs.q == 0);
    CHECK(obs.x == 0);
  }
}

TEST_CASE("single vehicle, always green: travel = ceil(D/v) + 1") {
  // derived by hand from the engine contract: free-flow seconds for the
  // whole route plus exactly one queued second per intersection crossing
  for (double ew : {300.0, 400.0, 330.0}) {
    Network net = build_grid(1, 1, ew, 300, 4);
    FlowSet flow = straight_flow(net, 1, 1, "road_bW0_i0x0_1");
    int phase = phase_of_movement(net, 0, "i0x0_WS");
    PinnedPhase ctl(phase);
    SimParams params;
    params.amber_s = 3;  // irrelevant: the phase never changes
    EpisodeResult r = run_episode(net, flow, ctl, 600, true, 0, params);
    REQUIRE(r.throughput == 1);
    const int expected = static_cast<int>(std::ceil(2.0 * ew / 11.0)) + 1;
    CHECK(*r.adjusted_att == doctest::Approx(expected));
  }
}

TEST_CASE("two crossings cost two queued seconds") {
  Network net = build_grid(1, 2, 300, 300, 4);
  FlowSet flow = straight_flow(net, 1, 1, "road_bW0_i0x0_1");
  REQUIRE(flow.vehicles[0].route.size() == 3);

  // both intersections pinned on the west-east straight phase
  class PinBoth : public Controller {
   public:
    explicit PinBoth(int phase) : phase_(phase) {}
    Decision decide(const Sim&, int) override { return {phase_, 1000000}; }
    int phase_;
  };
  PinBoth ctl(phase_of_movement(net, 0, "i0x0_WS"));
  EpisodeResult r = run_episode(net, flow, ctl, 600, true, 0, SimParams{});
  REQUIRE(r.throughput == 1);
  CHECK(*r.adjusted_att ==
        doctest::Approx(std::ceil(3.0 * 300.0 / 11.0) + 2));
}

TEST_CASE("saturation discharges exactly one vehicle per green second") {
  Network net = build_grid(1, 1, 300, 300, 4);
  // five vehicles arrive back to back on the west straight lane
  FlowSet flow = straight_flow(net, 5, 1, "road_bW0_i0x0_1");
  SimParams params;
  params.amber_s = 0;
  Sim sim(net, flow, params);
  int ws_phase = phase_of_movement(net, 0, "i0x0_WS");
  int ns_phase = phase_of_movement(net, 0, "i0x0_NS");
  int lane = net.lane_index("road_bW0_i0x0_1");

  // hold the cross phase until all five queue up
  sim.set_phase(0, ns_phase, 120);
  while (sim.observe_lane(lane).q < 5) sim.step();

  sim.set_phase(0, ws_phase, 120);
  sim.step();  // switch takes effect, first discharge next second
  int q = sim.observe_lane(lane).q;
  for (int i = 0; i < q; ++i) {
    int before = sim.observe_lane(lane).q;
    sim.step();
    CHECK(sim.observe_lane(lane).q == before - 1);
  }
}

TEST_CASE("recommitting the same phase keeps green continuous") {
  Network net = build_grid(1, 1, 300, 300, 4);
  FlowSet flow = straight_flow(net, 8, 1, "road_bW0_i0x0_1");
  SimParams params;
  params.amber_s = 3;
  Sim sim(net, flow, params);
  int ws_phase = phase_of_movement(net, 0, "i0x0_WS");
  int ns_phase = phase_of_movement(net, 0, "i0x0_NS");
  int lane = net.lane_index("road_bW0_i0x0_1");

  sim.set_phase(0, ns_phase, 1000);  // hold red until a queue builds
  while (sim.observe_lane(lane).q < 6) sim.step();
  sim.set_phase(0, ws_phase, 5);
  for (int t = 0; t < 5; ++t) sim.step();  // 3 amber + 2 green seconds
  CHECK_FALSE(sim.signal(0).in_amber);
  // re-commit mid-queue: no amber, discharge must not pause
  sim.set_phase(0, ws_phase, 5);
  CHECK_FALSE(sim.signal(0).in_amber);
  CHECK(sim.signal(0).elapsed == 0);
  int before = sim.observe_lane(lane).q;
  sim.step();
  CHECK(sim.observe_lane(lane).q == before - 1);
}

TEST_CASE("phase change inserts exactly amber_s all-red seconds") {
  Network net = build_grid(1, 1, 300, 300, 4);
  FlowSet flow = straight_flow(net, 6, 1, "road_bW0_i0x0_1");
  SimParams params;
  params.amber_s = 3;
  Sim sim(net, flow, params);
  sim.record_events(true);
  int ws_phase = phase_of_movement(net, 0, "i0x0_WS");
  int ns_phase = phase_of_movement(net, 0, "i0x0_NS");

  sim.set_phase(0, ns_phase, 60);
  int lane = net.lane_index("road_bW0_i0x0_1");
  while (sim.observe_lane(lane).q < 5) sim.step();

  sim.set_phase(0, ws_phase, 60);  // different phase: amber first
  int reds = 0;
  while (sim.signal(0).in_amber) {
    sim.step();
    CHECK(sim.last_events().discharges.empty());
    ++reds;
  }
  CHECK(reds == 3);
  sim.step();
  CHECK(sim.last_events().discharges.size() == 1);
}

TEST_CASE("durations outside the configured action set are rejected") {
  Network net = build_grid(1, 1, 300, 300, 4);
  FlowSet flow;
  SimParams params;
  params.duration_actions = {10, 15, 20, 25, 30, 35, 40};
  Sim sim(net, flow, params);
  CHECK_THROWS_AS(sim.set_phase(0, 0, 12), InvalidArgument);
  CHECK_NOTHROW(sim.set_phase(0, 0, 15));
  CHECK_THROWS_AS(sim.set_phase(0, 9, 15), InvalidArgument);
}

TEST_CASE("observation segments count from the stop line") {
  Network net = build_grid(1, 1, 800, 300, 4);
  FlowSet flow = straight_flow(net, 1, 1, "road_bW0_i0x0_1");
  SimParams params;
  params.amber_s = 0;
  Sim sim(net, flow, params);
  sim.set_phase(0, phase_of_movement(net, 0, "i0x0_NS"), 1000);

  int lane = net.lane_index("road_bW0_i0x0_1");
  // fresh sim: all zero
  for (const auto& o : sim.observe_all()) CHECK(o.x == 0);

  // after 60 steps the vehicle has moved 660 m: 140 m from the stop line
  for (int t = 0; t < 60; ++t) sim.step();
  LaneObservation o = sim.observe_lane(lane);
  CHECK(o.x == 1);
  CHECK(o.q == 0);
  CHECK(o.x_seg[0] == 0);
  CHECK(o.x_seg[1] == 1);
  CHECK(o.x_seg[2] == 0);
  CHECK(o.x_seg[3] == 0);
}

TEST_CASE("queued vs moving split in q and x") {
  Network net = build_grid(1, 1, 800, 300, 4);
  FlowSet flow = straight_flow(net, 5, 24, "road_bW0_i0x0_1");
  SimParams params;
  params.amber_s = 0;
  Sim sim(net, flow, params);
  sim.set_phase(0, phase_of_movement(net, 0, "i0x0_NS"), 1000);  // red for WS

  // 800 m at 11 m/s: a vehicle queues after 73 steps; entries 24 s apart
  for (int t = 0; t < 73 + 2 * 24; ++t) sim.step();
  int lane = net.lane_index("road_bW0_i0x0_1");
  LaneObservation o = sim.observe_lane(lane);
  CHECK(o.q == 3);
  CHECK(o.x == 5);
  int seg_total = o.x_seg[0] + o.x_seg[1] + o.x_seg[2] + o.x_seg[3];
  CHECK(seg_total == o.x);
}

TEST_CASE("drained light episode exits every vehicle") {
  Network net = build_grid(2, 2, 300, 300, 4);
  FlowSet flow = gen_poisson_flow(net, 0.3, 300, 3);
  MqlController mql(15);
  EpisodeResult r = run_episode(net, flow, mql, 300, true, 0, SimParams{});
  CHECK(r.throughput == (int)flow.vehicles.size());
  CHECK_FALSE(r.undrained);
}

TEST_CASE("identical inputs and seed give identical results") {
  Network net = build_grid(2, 2, 300, 300, 4);
  FlowSet flow = gen_poisson_flow(net, 0.8, 400, 5);
  MqlController a(15), b(15);
  EpisodeResult ra = run_episode(net, flow, a, 400, true, 9, SimParams{});
  EpisodeResult rb = run_episode(net, flow, b, 400, true, 9, SimParams{});
  CHECK(ra.to_json() == rb.to_json());
}

TEST_CASE("step after finalize is a state error") {
  Network net = build_grid(1, 1, 300, 300, 4);
  FlowSet flow;
  Sim sim(net, flow, SimParams{});
  sim.step();
  sim.finalize(false);
  CHECK_THROWS_AS(sim.step(), StateError);
}

TEST_CASE("conservation and FIFO hold under random load") {
  Network net = build_grid(2, 2, 300, 300, 4);
  FlowSet flow = gen_poisson_flow(net, 0.9, 300, 17);
  SimParams params;
  params.duration_actions = {15};
  Sim sim(net, flow, params);
  sim.record_events(true);
  MqlController mql(15);

  std::map<int, std::vector<int>> joined;  // lane -> vehicles in join order
  while (sim.clock() < 300) {
    control_tick(sim, mql);
    sim.step();
    CHECK(sim.scheduled_count() ==
          sim.exited_count() + sim.in_network() + sim.pending_outside());
    for (auto [lane, vid] : sim.last_events().queue_joins)
      joined[lane].push_back(vid);
    // every discharge pops the oldest joined vehicle of its lane
    for (const auto& d : sim.last_events().discharges) {
      int lane = net.movement(d.movement).in_lane;
      REQUIRE(!joined[lane].empty());
      CHECK(joined[lane].front() == d.vehicle);
      joined[lane].erase(joined[lane].begin());
    }
  }
}

TEST_CASE("entry backlog preserves vehicles when the lane is full") {
  Network net = build_grid(1, 1, 300, 300, 4);
  // 300/7 = 42 spots; 60 simultaneous arrivals must queue outside
  FlowSet flow = straight_flow(net, 60, 0, "road_bW0_i0x0_1");
  SimParams params;
  params.amber_s = 0;
  Sim sim(net, flow, params);
  sim.set_phase(0, phase_of_movement(net, 0, "i0x0_NS"), 2000);
  for (int t = 0; t < 40; ++t) sim.step();
  CHECK(sim.pending_outside() > 0);
  CHECK(sim.scheduled_count() == 60);

  // open the gate and drain
  sim.set_phase(0, phase_of_movement(net, 0, "i0x0_WS"), 100000);
  for (int t = 0; t < 400 && !sim.all_done(); ++t) sim.step();
  CHECK(sim.all_done());
}

}  // TEST_SUITE
