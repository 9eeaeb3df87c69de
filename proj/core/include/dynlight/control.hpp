#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dynlight/episode.hpp"
#include "dynlight/policies.hpp"
#include "dynlight/qnet.hpp"

namespace dynlight {

enum class EncoderKind { NV, TMP, QL, NVS };

const char* to_string(EncoderKind k);
EncoderKind encoder_from_string(const std::string& s);
/// Feature width of one per-movement block (4 segment counts for NVS,
/// 1 otherwise).
int encoder_block_dim(EncoderKind k);

enum class PhasePolicyKind { Mql, Emp, Cyclical };
const char* to_string(PhasePolicyKind k);
PhasePolicyKind phase_policy_from_string(const std::string& s);

struct DurationActionSet {
  std::string name;
  std::vector<int> seconds;  // strictly increasing, all >= 1
};

/// Throws InvalidArgument unless strictly increasing with values >= 1.
void validate_duration_set(const DurationActionSet& set);
/// Registry: config1..config5.
DurationActionSet duration_set_by_name(const std::string& name);
std::vector<std::string> duration_set_names();

/// Movements of a phase in canonical order (direction, then in-lane id);
/// the block order of every encoded state.
std::vector<int> phase_movements_canonical(const Network& net,
                                           int intersection, int phase);

/// Per-movement feature blocks for the selected phase, concatenated in
/// canonical order. Width depends only on the encoder kind and the phase
/// composition size, never on which phase was picked.
Vec encode_state(EncoderKind kind, std::span<const LaneObservation> obs,
                 const Network& net, int intersection, int phase);

/// Negative total queue over the intersection's signal-controlled
/// incoming lanes (right-turn lanes stay out of state and reward).
double reward(std::span<const LaneObservation> obs, const Network& net,
              int intersection);

struct TrainParams {
  double gamma = 0.8;
  double lr = 1e-3;
  int batch = 64;
  size_t buffer_capacity = 12000;
  int target_sync = 200;  // train steps between full target copies
  int train_every = 1;    // sim seconds between train steps
  double grad_clip = 5.0;
  double divergence_loss = 1e6;
};

/// Two-level controller: an optimization policy picks the phase, an
/// epsilon-greedy dueling Q-network picks its duration. One parameter
/// block is shared by every intersection. In training mode each decision
/// closes the previous transition with the reward observed at the new
/// decision epoch and pushes it to the shared replay buffer.
class DynLightController : public Controller {
 public:
  DynLightController(QNetwork* net, PhasePolicyKind phase_policy,
                     EncoderKind encoder, DurationActionSet durations);

  void reset(uint64_t seed) override;
  Decision decide(const Sim& sim, int intersection) override;
  std::vector<int> duration_actions() const override {
    return durations_.seconds;
  }
  void on_step(Sim& sim) override;

  void set_epsilon(double eps) { epsilon_ = eps; }
  /// Turns on transition collection and per-step DQN updates.
  void enable_training(const TrainParams& params);
  void disable_training() { training_ = false; }

  const QNetwork& network() const { return *net_; }
  ReplayBuffer* replay() { return replay_.get(); }
  int transitions_pushed() const { return transitions_pushed_; }
  int decisions_made() const { return decisions_made_; }
  double last_loss() const { return last_loss_; }

 private:
  int select_phase(std::span<const LaneObservation> obs, const Sim& sim,
                   int intersection);
  int select_action(const Vec& state);

  QNetwork* net_;
  PhasePolicyKind phase_policy_;
  EncoderKind encoder_;
  DurationActionSet durations_;
  double epsilon_ = 0.0;

  bool training_ = false;
  TrainParams train_params_;
  std::unique_ptr<ReplayBuffer> replay_;
  std::unique_ptr<QNetwork> target_;
  std::unique_ptr<AdamState> adam_;
  int train_steps_ = 0;
  int step_count_ = 0;

  struct PendingTransition {
    bool active = false;
    Vec s;
    int a = 0;
  };
  std::vector<PendingTransition> pending_;
  CyclicalCursor cursor_;
  Rng rng_{0};
  int transitions_pushed_ = 0;
  int decisions_made_ = 0;
  double last_loss_ = 0.0;
};

struct TrainConfig {
  PhasePolicyKind phase_policy = PhasePolicyKind::Mql;
  EncoderKind encoder = EncoderKind::NVS;
  DurationActionSet durations = duration_set_by_name("config2");
  int episodes = 80;
  int horizon_s = 3600;
  int hidden = 20;
  double eps_start = 0.8;
  double eps_end = 0.05;
  double eps_frac = 0.6;  // share of episodes spent annealing
  TrainParams train;
  SimParams sim;
  uint64_t config_hash() const;
};

struct TrainResult {
  QNetwork net;
  CheckpointMeta meta;
  std::vector<double> curve;  // evaluation adjusted ATT per episode
  double final_score = 0.0;   // mean of the last 10 evaluation episodes
};

/// Full training run: each episode trains with annealed epsilon, then a
/// greedy drained evaluation episode adds one curve point. Deterministic
/// for a fixed seed. Throws NumericError if the loss diverges.
TrainResult train_dynlight(const Network& net, const FlowSet& flow,
                           const TrainConfig& cfg, uint64_t seed);

/// Greedy (epsilon 0) controller around a frozen network.
std::unique_ptr<DynLightController> make_dynlight(
    QNetwork* net, PhasePolicyKind phase_policy, EncoderKind encoder,
    DurationActionSet durations);

/// The cyclical deployment variant: the trained duration network is kept,
/// the phase policy becomes fixed cyclical order. Throws ConfigError when
/// the checkpoint's duration set differs from the runtime set.
std::unique_ptr<DynLightController> make_dynlight_c(
    QNetwork* net, const CheckpointMeta& meta,
    const DurationActionSet& runtime_durations);

}  // namespace dynlight
