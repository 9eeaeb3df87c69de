#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynlight/common.hpp"

namespace dynlight {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;

  static Mat zeros(int r, int c) { return {r, c, Vec(size_t(r) * c, 0.0)}; }
  double& at(int r, int c) { return a[size_t(r) * cols + c]; }
  double at(int r, int c) const { return a[size_t(r) * cols + c]; }
};

enum class Act { Relu, Identity };

struct DenseLayer {
  Mat W;
  Vec b;
  Act act = Act::Relu;
};

/// Q-network over duration actions: per-lane feature blocks pass through a
/// shared embedding, are fused by addition, run through a dense trunk, and
/// split into dueling value/advantage branches combined as
/// Q = V + A - mean(A).
struct QNetwork {
  int block_dim = 1;
  int block_count = 2;
  int actions = 7;
  DenseLayer embed;
  std::vector<DenseLayer> trunk;
  std::vector<DenseLayer> value;      // ends in a single unit
  std::vector<DenseLayer> advantage;  // ends in `actions` units
};

QNetwork make_qnetwork(int block_dim, int block_count, int actions,
                       int hidden, Rng& rng);
/// Same layer shapes, all parameters zero (gradient/optimizer buffers).
QNetwork zeros_like(const QNetwork& net);

/// All parameter tensors in a fixed order (embed, trunk, value, advantage).
std::vector<Vec*> param_tensors(QNetwork& net);
std::vector<const Vec*> param_tensors(const QNetwork& net);

Vec dense_forward(const DenseLayer& layer, const Vec& x, Vec* pre = nullptr);

/// Dueling aggregation: Q[a] = v + adv[a] - mean(adv).
Vec dueling_combine(double v, const Vec& adv);

Vec q_forward(const QNetwork& net, std::span<const double> state);

struct Batch {
  std::vector<Vec> states;
  std::vector<int> actions;
  Vec targets;
};

/// Gradients of 0.5 * mean((Q[s,a] - target)^2) over the batch, written
/// into `grads` (shape of the network, zeroed first). Returns the loss.
double q_backward(const QNetwork& net, const Batch& batch, QNetwork& grads);

/// r + gamma * max(q_next), or r alone on terminal transitions.
double td_target(double r, const Vec& q_next, double gamma, bool done);

struct Transition {
  Vec s;
  int a = 0;
  double r = 0.0;
  Vec s_next;
  bool done = false;
};

/// Fixed-capacity ring with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}
  void push(Transition t);
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& sample_one(Rng& rng) const;

 private:
  size_t capacity_;
  size_t write_ = 0;
  std::vector<Transition> items_;
};

struct AdamState {
  QNetwork m, v;
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const QNetwork& shape);
void adam_update(QNetwork& params, const QNetwork& grads, AdamState& state,
                 double lr);
/// Scales gradients down to the given global L2 norm; returns the norm
/// observed before clipping.
double clip_global_norm(QNetwork& grads, double max_norm);

/// One DQN update: uniform batch, targets from the frozen `target_net`,
/// Adam step. Returns the loss, or nullopt when the buffer is still
/// smaller than the batch.
std::optional<double> train_step(QNetwork& net, const QNetwork& target_net,
                                 ReplayBuffer& buffer, int batch_size,
                                 double gamma, double lr, AdamState& opt,
                                 Rng& rng, double grad_clip = 5.0);

struct CheckpointMeta {
  std::string encoder;
  std::string duration_set_name;
  std::vector<int> durations;
  int phases = 4;
  uint64_t config_hash = 0;
};

void save_checkpoint(const QNetwork& net, const CheckpointMeta& meta,
                     const std::string& path);
std::pair<QNetwork, CheckpointMeta> load_checkpoint(const std::string& path);

}  // namespace dynlight
