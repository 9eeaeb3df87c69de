#include "dynlight/control.hpp"

#include <algorithm>
#include <cmath>

namespace dynlight {

const char* to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::NV: return "nv";
    case EncoderKind::TMP: return "tmp";
    case EncoderKind::QL: return "ql";
    case EncoderKind::NVS: return "nvs";
  }
  return "nvs";
}

EncoderKind encoder_from_string(const std::string& s) {
  if (s == "nv") return EncoderKind::NV;
  if (s == "tmp") return EncoderKind::TMP;
  if (s == "ql") return EncoderKind::QL;
  if (s == "nvs") return EncoderKind::NVS;
  throw InvalidArgument("unknown encoder kind '" + s + "'");
}

int encoder_block_dim(EncoderKind k) {
  return k == EncoderKind::NVS ? 4 : 1;
}

const char* to_string(PhasePolicyKind k) {
  switch (k) {
    case PhasePolicyKind::Mql: return "mql";
    case PhasePolicyKind::Emp: return "emp";
    case PhasePolicyKind::Cyclical: return "cyclical";
  }
  return "mql";
}

PhasePolicyKind phase_policy_from_string(const std::string& s) {
  if (s == "mql") return PhasePolicyKind::Mql;
  if (s == "emp") return PhasePolicyKind::Emp;
  if (s == "cyclical") return PhasePolicyKind::Cyclical;
  throw InvalidArgument("unknown phase policy '" + s + "'");
}

void validate_duration_set(const DurationActionSet& set) {
  if (set.seconds.empty())
    throw InvalidArgument("duration action set '" + set.name + "' is empty");
  int prev = 0;
  for (int s : set.seconds) {
    if (s < 1)
      throw InvalidArgument("duration action set '" + set.name +
                            "' contains a value below 1 second");
    if (s <= prev)
      throw InvalidArgument("duration action set '" + set.name +
                            "' is not strictly increasing");
    prev = s;
  }
}

DurationActionSet duration_set_by_name(const std::string& name) {
  DurationActionSet set;
  set.name = name;
  if (name == "config1") {
    set.seconds = {10, 20, 30, 40};
  } else if (name == "config2") {
    set.seconds = {10, 15, 20, 25, 30, 35, 40};
  } else if (name == "config3") {
    set.seconds = {10, 13, 16, 19, 22, 25, 28, 31, 34, 37, 40};
  } else if (name == "config4") {
    set.seconds = {10, 15, 20};
  } else if (name == "config5") {
    set.seconds = {10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};
  } else {
    throw InvalidArgument("unknown duration action set '" + name + "'");
  }
  return set;
}

std::vector<std::string> duration_set_names() {
  return {"config1", "config2", "config3", "config4", "config5"};
}

std::vector<int> phase_movements_canonical(const Network& net,
                                           int intersection, int phase) {
  const Intersection& inter = net.intersection(intersection);
  if (phase < 0 || phase >= static_cast<int>(inter.phases.size()))
    throw InvalidArgument("phase index out of range for " + inter.id);
  std::vector<int> movs = inter.phases[phase].movements;
  std::sort(movs.begin(), movs.end(), [&](int a, int b) {
    const Movement& ma = net.movement(a);
    const Movement& mb = net.movement(b);
    if (ma.dir != mb.dir) return ma.dir < mb.dir;
    return net.lane(ma.in_lane).id < net.lane(mb.in_lane).id;
  });
  return movs;
}

Vec encode_state(EncoderKind kind, std::span<const LaneObservation> obs,
                 const Network& net, int intersection, int phase) {
  Vec out;
  for (int mi : phase_movements_canonical(net, intersection, phase)) {
    const Movement& mov = net.movement(mi);
    const LaneObservation& lane = obs[mov.in_lane];
    switch (kind) {
      case EncoderKind::NV:
        out.push_back(lane.x);
        break;
      case EncoderKind::QL:
        out.push_back(lane.q);
        break;
      case EncoderKind::TMP:
        out.push_back(movement_pressure(obs, net, mi));
        break;
      case EncoderKind::NVS:
        for (int seg : lane.x_seg) out.push_back(seg);
        break;
    }
  }
  return out;
}

double reward(std::span<const LaneObservation> obs, const Network& net,
              int intersection) {
  double total = 0;
  for (int l : net.intersection(intersection).signal_lanes) total += obs[l].q;
  return -total;
}

// ---------------------------------------------------------------------------
// DynLightController

DynLightController::DynLightController(QNetwork* net,
                                       PhasePolicyKind phase_policy,
                                       EncoderKind encoder,
                                       DurationActionSet durations)
    : net_(net),
      phase_policy_(phase_policy),
      encoder_(encoder),
      durations_(std::move(durations)) {
  if (!net_) throw InvalidArgument("DynLightController: null network");
  validate_duration_set(durations_);
  if (static_cast<int>(durations_.seconds.size()) != net_->actions)
    throw ConfigError("duration action set size " +
                      std::to_string(durations_.seconds.size()) +
                      " does not match network action count " +
                      std::to_string(net_->actions));
}

void DynLightController::enable_training(const TrainParams& params) {
  training_ = true;
  train_params_ = params;
  if (!replay_) replay_ = std::make_unique<ReplayBuffer>(params.buffer_capacity);
  if (!target_) target_ = std::make_unique<QNetwork>(*net_);
  if (!adam_) adam_ = std::make_unique<AdamState>(make_adam(*net_));
}

void DynLightController::reset(uint64_t seed) {
  rng_ = Rng(seed);
  pending_.clear();
  cursor_.index.clear();
  decisions_made_ = 0;
  // replay, optimizer state and counters persist across episodes
}

int DynLightController::select_phase(std::span<const LaneObservation> obs,
                                     const Sim& sim, int intersection) {
  switch (phase_policy_) {
    case PhasePolicyKind::Mql:
      return max_queue_length(obs, sim.network(), intersection).phase;
    case PhasePolicyKind::Emp:
      return efficient_max_pressure(obs, sim.network(), intersection).phase;
    case PhasePolicyKind::Cyclical:
    default:
      return cyclical_next(cursor_, sim.network(), intersection).phase;
  }
}

int DynLightController::select_action(const Vec& state) {
  if (epsilon_ > 0 && rng_.uniform() < epsilon_)
    return static_cast<int>(rng_.uniform_int(net_->actions));
  Vec q = q_forward(*net_, state);
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

Decision DynLightController::decide(const Sim& sim, int intersection) {
  if (pending_.empty())
    pending_.resize(sim.network().intersections().size());
  if (cursor_.index.empty())
    cursor_.index.assign(sim.network().intersections().size(), 0);

  auto obs = sim.observe_all();
  const int phase = select_phase(obs, sim, intersection);
  Vec state = encode_state(encoder_, obs, sim.network(), intersection, phase);

  PendingTransition& pend = pending_[intersection];
  if (training_ && pend.active) {
    Transition tr;
    tr.s = pend.s;
    tr.a = pend.a;
    tr.r = reward(obs, sim.network(), intersection);
    tr.s_next = state;
    tr.done = false;
    replay_->push(std::move(tr));
    ++transitions_pushed_;
  }

  const int action = select_action(state);
  if (training_) {
    pend.active = true;
    pend.s = std::move(state);
    pend.a = action;
  }
  ++decisions_made_;
  return {phase, durations_.seconds[action]};
}

void DynLightController::on_step(Sim&) {
  if (!training_) return;
  ++step_count_;
  if (step_count_ % train_params_.train_every != 0) return;
  auto loss = train_step(*net_, *target_, *replay_, train_params_.batch,
                         train_params_.gamma, train_params_.lr, *adam_, rng_,
                         train_params_.grad_clip);
  if (!loss) return;
  last_loss_ = *loss;
  if (*loss > train_params_.divergence_loss)
    throw NumericError("training diverged: loss " + std::to_string(*loss));
  if (++train_steps_ % train_params_.target_sync == 0) *target_ = *net_;
}

// ---------------------------------------------------------------------------
// training loop

uint64_t TrainConfig::config_hash() const {
  std::string s = std::string(to_string(phase_policy)) + "|" +
                  to_string(encoder) + "|" + durations.name + "|";
  for (int d : durations.seconds) s += std::to_string(d) + ",";
  s += "|" + std::to_string(episodes) + "|" + std::to_string(horizon_s) +
       "|" + std::to_string(hidden);
  // FNV-1a
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

int phase_block_count(const Network& net) {
  // phase composition size is uniform across phases and intersections
  int per_phase =
      static_cast<int>(net.intersection(0).phases.at(0).movements.size());
  for (const Intersection& inter : net.intersections())
    for (const Phase& p : inter.phases)
      if (static_cast<int>(p.movements.size()) != per_phase)
        throw InvalidArgument(
            "encode_state needs a uniform phase composition size");
  return per_phase;
}

}  // namespace

TrainResult train_dynlight(const Network& net, const FlowSet& flow,
                           const TrainConfig& cfg, uint64_t seed) {
  validate_duration_set(cfg.durations);
  const int block_count = phase_block_count(net);
  Rng init_rng(seed ^ 0x9e3779b97f4a7c15ull);
  TrainResult result;
  result.net = make_qnetwork(encoder_block_dim(cfg.encoder), block_count,
                             static_cast<int>(cfg.durations.seconds.size()),
                             cfg.hidden, init_rng);

  DynLightController agent(&result.net, cfg.phase_policy, cfg.encoder,
                           cfg.durations);
  agent.enable_training(cfg.train);

  SimParams sim_params = cfg.sim;
  sim_params.duration_actions = cfg.durations.seconds;

  const int anneal =
      std::max(1, static_cast<int>(std::ceil(cfg.eps_frac * cfg.episodes)));
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    double frac = std::min(1.0, static_cast<double>(ep) / anneal);
    agent.set_epsilon(cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start));
    run_episode(net, flow, agent, cfg.horizon_s, /*drain=*/false,
                seed * 1000003ull + ep, sim_params);

    // greedy drained evaluation gives the curve point
    DynLightController eval(&result.net, cfg.phase_policy, cfg.encoder,
                            cfg.durations);
    eval.set_epsilon(0.0);
    EpisodeResult er = run_episode(net, flow, eval, cfg.horizon_s,
                                   /*drain=*/true, seed, sim_params);
    result.curve.push_back(er.adjusted_att.value_or(0.0));
  }

  if (!result.curve.empty()) {
    int n = std::min<size_t>(10, result.curve.size());
    double sum = 0;
    for (size_t i = result.curve.size() - n; i < result.curve.size(); ++i)
      sum += result.curve[i];
    result.final_score = sum / n;
  }

  result.meta.encoder = to_string(cfg.encoder);
  result.meta.duration_set_name = cfg.durations.name;
  result.meta.durations = cfg.durations.seconds;
  result.meta.phases =
      static_cast<int>(net.intersection(0).phases.size());
  result.meta.config_hash = cfg.config_hash();
  return result;
}

std::unique_ptr<DynLightController> make_dynlight(
    QNetwork* net, PhasePolicyKind phase_policy, EncoderKind encoder,
    DurationActionSet durations) {
  auto c = std::make_unique<DynLightController>(net, phase_policy, encoder,
                                                std::move(durations));
  c->set_epsilon(0.0);
  return c;
}

std::unique_ptr<DynLightController> make_dynlight_c(
    QNetwork* net, const CheckpointMeta& meta,
    const DurationActionSet& runtime_durations) {
  if (meta.durations != runtime_durations.seconds)
    throw ConfigError(
        "checkpoint duration set does not match the runtime configuration");
  return make_dynlight(net, PhasePolicyKind::Cyclical,
                       encoder_from_string(meta.encoder), runtime_durations);
}

}  // namespace dynlight
