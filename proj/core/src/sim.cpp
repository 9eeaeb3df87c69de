#include "dynlight/sim.hpp"

#include <algorithm>
#include <cmath>

namespace dynlight {

Sim::Sim(const Network& net, const FlowSet& flow, SimParams params)
    : net_(&net), flow_(&flow), params_(std::move(params)) {
  if (params_.sat_rate <= 0)
    throw InvalidArgument("sim: sat_rate must be positive");
  if (params_.amber_s < 0) throw InvalidArgument("sim: amber_s must be >= 0");

  vehicles_.resize(flow.vehicles.size());
  log_.trips.resize(flow.vehicles.size());
  for (size_t i = 0; i < flow.vehicles.size(); ++i)
    log_.trips[i].enter = flow.vehicles[i].enter_time;

  lane_rt_.resize(net.lanes().size());
  for (size_t l = 0; l < net.lanes().size(); ++l)
    lane_rt_[l].cap = std::max(
        1, static_cast<int>(net.lane(static_cast<int>(l)).length /
                            params_.vehicle_space_m));

  signals_.resize(net.intersections().size());
}

int Sim::resolve_movement(int lane, int next_lane) const {
  for (int m : net_->movements_from_lane(lane)) {
    const auto& outs = net_->movement(m).out_lanes;
    if (std::find(outs.begin(), outs.end(), next_lane) != outs.end()) return m;
  }
  throw StateError("no movement connects lane '" + net_->lane(lane).id +
                   "' to '" + net_->lane(next_lane).id + "'");
}

void Sim::enter_lane(int vehicle, int lane) {
  VehicleRt& v = vehicles_[vehicle];
  v.lane_end += net_->lane(lane).length;
  v.mode = VehicleRt::Mode::Running;
  v.required_movement = -1;
  lane_rt_[lane].running.push_back(vehicle);
}

void Sim::inject() {
  const auto& specs = flow_->vehicles;
  while (next_spec_ < specs.size() &&
         specs[next_spec_].enter_time == clock_) {
    int vid = static_cast<int>(next_spec_);
    vehicles_[vid].mode = VehicleRt::Mode::Pending;
    lane_rt_[specs[vid].route.front()].backlog.push_back(vid);
    ++scheduled_;
    ++pending_;
    ++next_spec_;
  }
  for (int lane : net_->entry_lanes()) {
    LaneRt& rt = lane_rt_[lane];
    while (!rt.backlog.empty() && rt.occupancy() < rt.cap) {
      int vid = rt.backlog.front();
      rt.backlog.pop_front();
      VehicleRt& v = vehicles_[vid];
      v.pos = 0.0;
      v.lane_end = 0.0;
      v.route_index = 0;
      enter_lane(vid, lane);
      --pending_;
    }
  }
}

void Sim::move() {
  const auto& specs = flow_->vehicles;
  for (size_t l = 0; l < lane_rt_.size(); ++l) {
    LaneRt& rt = lane_rt_[l];
    if (rt.running.empty()) continue;
    const double speed = net_->lane(static_cast<int>(l)).free_flow_speed;
    std::deque<int> keep;
    for (int vid : rt.running) {
      VehicleRt& v = vehicles_[vid];
      // a released vehicle can carry banked progress past a short lane;
      // it then queues immediately without moving further
      if (v.pos < v.lane_end) v.pos += speed;
      if (v.pos >= v.lane_end) {
        const auto& route = specs[vid].route;
        if (v.route_index + 1 == static_cast<int>(route.size())) {
          v.mode = VehicleRt::Mode::Done;
          log_.trips[vid].exit = clock_ + 1;
          ++exited_;
          if (record_events_) events_.exits.push_back(vid);
        } else {
          v.mode = VehicleRt::Mode::Queued;
          v.queue_join_step = clock_;
          v.required_movement = resolve_movement(
              route[v.route_index], route[v.route_index + 1]);
          rt.queue.push_back(vid);
          if (record_events_)
            events_.queue_joins.emplace_back(static_cast<int>(l), vid);
        }
      } else {
        keep.push_back(vid);
      }
    }
    rt.running.swap(keep);
  }
}

int Sim::discharge_budget() const {
  const double s = params_.sat_rate;
  return static_cast<int>(std::floor((clock_ + 1) * s) -
                          std::floor(clock_ * s));
}

void Sim::discharge() {
  const int budget_per_movement = discharge_budget();
  if (budget_per_movement <= 0) return;
  const auto& specs = flow_->vehicles;

  for (size_t i = 0; i < net_->intersections().size(); ++i) {
    const SignalState& sig = signals_[i];
    if (sig.in_amber) continue;
    const Intersection& inter = net_->intersection(static_cast<int>(i));

    // green movements: the committed phase's, then free-flowing right turns
    std::vector<int> green;
    if (sig.current_phase >= 0)
      green = inter.phases[sig.current_phase].movements;
    for (int m : inter.movements)
      if (net_->movement(m).dir == Dir::Right) green.push_back(m);

    for (int mi : green) {
      const Movement& mov = net_->movement(mi);
      LaneRt& rt = lane_rt_[mov.in_lane];
      int budget = budget_per_movement;
      while (budget > 0 && !rt.queue.empty()) {
        int vid = rt.queue.front();
        VehicleRt& v = vehicles_[vid];
        if (v.queue_join_step >= clock_) break;   // joined this very second
        if (v.required_movement != mi) break;     // FIFO head-of-line block
        int target = specs[vid].route[v.route_index + 1];
        if (lane_rt_[target].occupancy() >= lane_rt_[target].cap) break;
        rt.queue.pop_front();
        v.route_index += 1;
        enter_lane(vid, target);
        --budget;
        if (record_events_) events_.discharges.push_back({mi, vid});
      }
    }
  }
}

void Sim::advance_signals() {
  for (SignalState& sig : signals_) {
    if (sig.in_amber) {
      if (--sig.amber_remaining <= 0) sig.in_amber = false;
    } else if (sig.current_phase >= 0 &&
               sig.elapsed < sig.committed_duration) {
      ++sig.elapsed;
    }
  }
}

void Sim::step() {
  if (finalized_) throw StateError("step() after episode finalization");
  events_ = StepEvents{};

  inject();
  move();
  discharge();
  advance_signals();

  std::vector<int> sums(net_->intersections().size(), 0);
  for (size_t i = 0; i < net_->intersections().size(); ++i)
    for (int l : net_->intersection(static_cast<int>(i)).incoming_lanes)
      sums[i] += static_cast<int>(lane_rt_[l].queue.size());
  log_.queue_sums.push_back(std::move(sums));

  ++clock_;
}

void Sim::set_phase(int intersection, int phase_index, int duration_s) {
  SignalState& sig = signals_.at(intersection);
  const Intersection& inter = net_->intersection(intersection);
  if (phase_index < 0 || phase_index >= static_cast<int>(inter.phases.size()))
    throw InvalidArgument("set_phase: phase " + std::to_string(phase_index) +
                          " not in phase set of " + inter.id);
  if (!params_.duration_actions.empty()) {
    const auto& da = params_.duration_actions;
    if (std::find(da.begin(), da.end(), duration_s) == da.end())
      throw InvalidArgument("set_phase: duration " +
                            std::to_string(duration_s) +
                            " outside the configured action set");
  } else if (duration_s < 1) {
    throw InvalidArgument("set_phase: duration must be >= 1");
  }

  const bool change = sig.current_phase != phase_index;
  const bool first = sig.current_phase < 0;
  sig.committed_duration = duration_s;
  sig.elapsed = 0;
  if (change) {
    sig.current_phase = phase_index;
    if (!first && params_.amber_s > 0) {
      sig.in_amber = true;
      sig.amber_remaining = params_.amber_s;
    }
  }
}

bool Sim::needs_decision(int intersection) const {
  const SignalState& sig = signals_.at(intersection);
  if (sig.in_amber) return false;
  return sig.current_phase < 0 || sig.elapsed >= sig.committed_duration;
}

LaneObservation Sim::observe_lane(int lane) const {
  const LaneRt& rt = lane_rt_.at(lane);
  LaneObservation o;
  o.q = static_cast<int>(rt.queue.size());
  o.x = o.q + static_cast<int>(rt.running.size());
  o.x_seg[0] += o.q;
  for (int vid : rt.running) {
    const VehicleRt& v = vehicles_[vid];
    double dist = v.lane_end - v.pos;
    if (dist < 0) dist = 0;
    int seg = std::min(3, static_cast<int>(dist / 100.0));
    o.x_seg[seg] += 1;
  }
  return o;
}

std::vector<LaneObservation> Sim::observe_all() const {
  std::vector<LaneObservation> out(net_->lanes().size());
  for (size_t l = 0; l < out.size(); ++l)
    out[l] = observe_lane(static_cast<int>(l));
  return out;
}

IntersectionObservation Sim::observe(int intersection) const {
  const Intersection& inter = net_->intersection(intersection);
  IntersectionObservation out;
  out.lanes = inter.incoming_lanes;
  out.obs.reserve(out.lanes.size());
  for (int l : out.lanes) out.obs.push_back(observe_lane(l));
  out.signal = signals_.at(intersection);
  return out;
}

void Sim::finalize(bool undrained) {
  log_.undrained = undrained;
  log_.end_clock = clock_;
  finalized_ = true;
}

}  // namespace dynlight
