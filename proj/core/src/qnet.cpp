#include "dynlight/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace dynlight {

using nlohmann::json;

namespace {

DenseLayer make_layer(int in, int out, Act act, Rng& rng) {
  DenseLayer layer;
  layer.W = Mat::zeros(out, in);
  layer.b.assign(out, 0.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : layer.W.a) w = (rng.uniform() * 2.0 - 1.0) * bound;
  for (double& b : layer.b) b = (rng.uniform() * 2.0 - 1.0) * bound;
  layer.act = act;
  return layer;
}

double activate(double x, Act act) {
  return act == Act::Relu ? (x > 0 ? x : 0.0) : x;
}

double activate_grad(double pre, Act act) {
  return act == Act::Relu ? (pre > 0 ? 1.0 : 0.0) : 1.0;
}

}  // namespace

QNetwork make_qnetwork(int block_dim, int block_count, int actions,
                       int hidden, Rng& rng) {
  if (block_dim < 1 || block_count < 1 || actions < 1 || hidden < 1)
    throw InvalidArgument("make_qnetwork: all dimensions must be >= 1");
  QNetwork net;
  net.block_dim = block_dim;
  net.block_count = block_count;
  net.actions = actions;
  net.embed = make_layer(block_dim, hidden, Act::Relu, rng);
  net.trunk.push_back(make_layer(hidden, hidden, Act::Relu, rng));
  net.trunk.push_back(make_layer(hidden, hidden, Act::Relu, rng));
  net.value.push_back(make_layer(hidden, 1, Act::Identity, rng));
  net.advantage.push_back(make_layer(hidden, actions, Act::Identity, rng));
  return net;
}

QNetwork zeros_like(const QNetwork& net) {
  QNetwork z = net;
  for (Vec* t : param_tensors(z)) std::fill(t->begin(), t->end(), 0.0);
  return z;
}

std::vector<Vec*> param_tensors(QNetwork& net) {
  std::vector<Vec*> out = {&net.embed.W.a, &net.embed.b};
  for (auto& l : net.trunk) {
    out.push_back(&l.W.a);
    out.push_back(&l.b);
  }
  for (auto& l : net.value) {
    out.push_back(&l.W.a);
    out.push_back(&l.b);
  }
  for (auto& l : net.advantage) {
    out.push_back(&l.W.a);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Vec*> param_tensors(const QNetwork& net) {
  auto mut = param_tensors(const_cast<QNetwork&>(net));
  return {mut.begin(), mut.end()};
}

Vec dense_forward(const DenseLayer& layer, const Vec& x, Vec* pre_out) {
  if (static_cast<int>(x.size()) != layer.W.cols)
    throw InvalidArgument("dense_forward: input width " +
                          std::to_string(x.size()) + " != " +
                          std::to_string(layer.W.cols));
  Vec out(layer.W.rows);
  for (int r = 0; r < layer.W.rows; ++r) {
    double z = layer.b[r];
    const double* wrow = &layer.W.a[size_t(r) * layer.W.cols];
    for (int c = 0; c < layer.W.cols; ++c) z += wrow[c] * x[c];
    out[r] = z;
  }
  if (pre_out) *pre_out = out;
  for (int r = 0; r < layer.W.rows; ++r) out[r] = activate(out[r], layer.act);
  return out;
}

Vec dueling_combine(double v, const Vec& adv) {
  double mean = 0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  Vec q(adv.size());
  for (size_t i = 0; i < adv.size(); ++i) q[i] = v + adv[i] - mean;
  return q;
}

namespace {

struct Trace {
  std::vector<Vec> embed_pre;   // per block
  std::vector<Vec> embed_post;  // per block
  Vec fused;
  std::vector<Vec> trunk_pre, trunk_post;
  std::vector<Vec> value_pre, value_post;
  std::vector<Vec> adv_pre, adv_post;
  Vec q;
};

Trace forward_trace(const QNetwork& net, std::span<const double> state) {
  if (static_cast<int>(state.size()) != net.block_dim * net.block_count)
    throw InvalidArgument("q_forward: state width " +
                          std::to_string(state.size()) + " != " +
                          std::to_string(net.block_dim * net.block_count));
  Trace t;
  t.fused.assign(net.embed.W.rows, 0.0);
  for (int b = 0; b < net.block_count; ++b) {
    Vec block(state.begin() + size_t(b) * net.block_dim,
              state.begin() + size_t(b + 1) * net.block_dim);
    Vec pre;
    Vec post = dense_forward(net.embed, block, &pre);
    for (size_t i = 0; i < t.fused.size(); ++i) t.fused[i] += post[i];
    t.embed_pre.push_back(std::move(pre));
    t.embed_post.push_back(std::move(post));
  }
  Vec h = t.fused;
  for (const auto& layer : net.trunk) {
    Vec pre;
    h = dense_forward(layer, h, &pre);
    t.trunk_pre.push_back(std::move(pre));
    t.trunk_post.push_back(h);
  }
  Vec hv = h;
  for (const auto& layer : net.value) {
    Vec pre;
    hv = dense_forward(layer, hv, &pre);
    t.value_pre.push_back(std::move(pre));
    t.value_post.push_back(hv);
  }
  Vec ha = h;
  for (const auto& layer : net.advantage) {
    Vec pre;
    ha = dense_forward(layer, ha, &pre);
    t.adv_pre.push_back(std::move(pre));
    t.adv_post.push_back(ha);
  }
  t.q = dueling_combine(hv[0], ha);
  return t;
}

// backprop through a dense stack; returns gradient w.r.t. the stack input
Vec backprop_stack(const std::vector<DenseLayer>& layers,
                   const Vec& stack_input, const std::vector<Vec>& pre,
                   const std::vector<Vec>& post, Vec d_out,
                   std::vector<DenseLayer>& grads) {
  for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
    const DenseLayer& layer = layers[li];
    const Vec& input = li == 0 ? stack_input : post[li - 1];
    Vec d_pre(layer.W.rows);
    for (int r = 0; r < layer.W.rows; ++r)
      d_pre[r] = d_out[r] * activate_grad(pre[li][r], layer.act);
    for (int r = 0; r < layer.W.rows; ++r) {
      grads[li].b[r] += d_pre[r];
      double* grow = &grads[li].W.a[size_t(r) * layer.W.cols];
      for (int c = 0; c < layer.W.cols; ++c) grow[c] += d_pre[r] * input[c];
    }
    Vec d_in(layer.W.cols, 0.0);
    for (int r = 0; r < layer.W.rows; ++r) {
      const double* wrow = &layer.W.a[size_t(r) * layer.W.cols];
      for (int c = 0; c < layer.W.cols; ++c) d_in[c] += wrow[c] * d_pre[r];
    }
    d_out = std::move(d_in);
  }
  return d_out;
}

}  // namespace

Vec q_forward(const QNetwork& net, std::span<const double> state) {
  for (double x : state)
    if (!std::isfinite(x)) throw NumericError("q_forward: non-finite input");
  return forward_trace(net, state).q;
}

double q_backward(const QNetwork& net, const Batch& batch, QNetwork& grads) {
  if (batch.states.empty())
    throw InvalidArgument("q_backward: empty batch");
  if (batch.states.size() != batch.actions.size() ||
      batch.states.size() != batch.targets.size())
    throw InvalidArgument("q_backward: batch arrays disagree in length");
  for (Vec* t : param_tensors(grads)) std::fill(t->begin(), t->end(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(batch.states.size());
  double loss = 0.0;
  for (size_t k = 0; k < batch.states.size(); ++k) {
    const Vec& s = batch.states[k];
    for (double x : s)
      if (!std::isfinite(x)) throw NumericError("q_backward: NaN in inputs");
    if (!std::isfinite(batch.targets[k]))
      throw NumericError("q_backward: NaN in targets");
    const int a = batch.actions[k];
    if (a < 0 || a >= net.actions)
      throw InvalidArgument("q_backward: action index out of range");

    Trace t = forward_trace(net, s);
    const double err = t.q[a] - batch.targets[k];
    loss += 0.5 * err * err * inv_n;
    const double dq = err * inv_n;

    // dueling combine: dQ[a]/dV = 1, dQ[a]/dA[j] = [j==a] - 1/actions
    Vec d_value_out = {dq};
    Vec d_adv_out(net.actions, -dq / net.actions);
    d_adv_out[a] += dq;

    Vec d_h_value = backprop_stack(net.value, t.trunk_post.empty()
                                                  ? t.fused
                                                  : t.trunk_post.back(),
                                   t.value_pre, t.value_post, d_value_out,
                                   grads.value);
    Vec d_h_adv = backprop_stack(net.advantage,
                                 t.trunk_post.empty() ? t.fused
                                                      : t.trunk_post.back(),
                                 t.adv_pre, t.adv_post, d_adv_out,
                                 grads.advantage);
    Vec d_h(d_h_value.size());
    for (size_t i = 0; i < d_h.size(); ++i) d_h[i] = d_h_value[i] + d_h_adv[i];

    Vec d_fused = backprop_stack(net.trunk, t.fused, t.trunk_pre,
                                 t.trunk_post, std::move(d_h), grads.trunk);

    // shared embedding: every block receives the fused gradient
    std::vector<DenseLayer> embed_grads = {grads.embed};
    for (int b = 0; b < net.block_count; ++b) {
      Vec block(s.begin() + size_t(b) * net.block_dim,
                s.begin() + size_t(b + 1) * net.block_dim);
      std::vector<Vec> pre = {t.embed_pre[b]};
      std::vector<Vec> post = {t.embed_post[b]};
      std::vector<DenseLayer> stack = {net.embed};
      backprop_stack(stack, block, pre, post, d_fused, embed_grads);
    }
    grads.embed = embed_grads[0];
  }
  return loss;
}

double td_target(double r, const Vec& q_next, double gamma, bool done) {
  if (gamma < 0 || gamma >= 1)
    throw InvalidArgument("td_target: gamma must be in [0, 1)");
  if (done) return r;
  double best = q_next.at(0);
  for (double q : q_next) best = std::max(best, q);
  return r + gamma * best;
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[write_] = std::move(t);
  }
  write_ = (write_ + 1) % capacity_;
}

const Transition& ReplayBuffer::sample_one(Rng& rng) const {
  if (items_.empty()) throw StateError("sample from empty replay buffer");
  return items_[rng.uniform_int(static_cast<int64_t>(items_.size()))];
}

AdamState make_adam(const QNetwork& shape) {
  AdamState s;
  s.m = zeros_like(shape);
  s.v = zeros_like(shape);
  return s;
}

void adam_update(QNetwork& params, const QNetwork& grads, AdamState& state,
                 double lr) {
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto p = param_tensors(params);
  auto g = param_tensors(grads);
  auto m = param_tensors(state.m);
  auto v = param_tensors(state.v);
  for (size_t t = 0; t < p.size(); ++t) {
    Vec& pv = *p[t];
    const Vec& gv = *g[t];
    Vec& mv = *m[t];
    Vec& vv = *v[t];
    for (size_t i = 0; i < pv.size(); ++i) {
      mv[i] = b1 * mv[i] + (1 - b1) * gv[i];
      vv[i] = b2 * vv[i] + (1 - b2) * gv[i] * gv[i];
      const double mhat = mv[i] / bc1;
      const double vhat = vv[i] / bc2;
      pv[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double clip_global_norm(QNetwork& grads, double max_norm) {
  double ss = 0;
  for (const Vec* t : param_tensors(static_cast<const QNetwork&>(grads)))
    for (double g : *t) ss += g * g;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0) {
    const double scale = max_norm / norm;
    for (Vec* t : param_tensors(grads))
      for (double& g : *t) g *= scale;
  }
  return norm;
}

std::optional<double> train_step(QNetwork& net, const QNetwork& target_net,
                                 ReplayBuffer& buffer, int batch_size,
                                 double gamma, double lr, AdamState& opt,
                                 Rng& rng, double grad_clip) {
  if (static_cast<int>(buffer.size()) < batch_size) return std::nullopt;
  Batch batch;
  batch.states.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const Transition& tr = buffer.sample_one(rng);
    batch.states.push_back(tr.s);
    batch.actions.push_back(tr.a);
    batch.targets.push_back(
        td_target(tr.r, q_forward(target_net, tr.s_next), gamma, tr.done));
  }
  QNetwork grads = zeros_like(net);
  const double loss = q_backward(net, batch, grads);
  clip_global_norm(grads, grad_clip);
  adam_update(net, grads, opt, lr);
  return loss;
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

json layer_to_json(const DenseLayer& l) {
  return {{"rows", l.W.rows},
          {"cols", l.W.cols},
          {"w", l.W.a},
          {"b", l.b},
          {"act", l.act == Act::Relu ? "relu" : "identity"}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer l;
  l.W.rows = j.at("rows").get<int>();
  l.W.cols = j.at("cols").get<int>();
  l.W.a = j.at("w").get<Vec>();
  l.b = j.at("b").get<Vec>();
  if (l.W.a.size() != size_t(l.W.rows) * l.W.cols ||
      l.b.size() != size_t(l.W.rows))
    throw FormatError("checkpoint layer dimensions disagree with data");
  l.act = j.at("act").get<std::string>() == "relu" ? Act::Relu : Act::Identity;
  return l;
}

}  // namespace

void save_checkpoint(const QNetwork& net, const CheckpointMeta& meta,
                     const std::string& path) {
  json j;
  j["format"] = "dynlight-checkpoint";
  j["version"] = 1;
  j["meta"] = {{"encoder", meta.encoder},
               {"duration_set_name", meta.duration_set_name},
               {"durations", meta.durations},
               {"phases", meta.phases},
               {"config_hash", meta.config_hash}};
  j["block_dim"] = net.block_dim;
  j["block_count"] = net.block_count;
  j["actions"] = net.actions;
  j["embed"] = layer_to_json(net.embed);
  json trunk = json::array(), value = json::array(), adv = json::array();
  for (const auto& l : net.trunk) trunk.push_back(layer_to_json(l));
  for (const auto& l : net.value) value.push_back(layer_to_json(l));
  for (const auto& l : net.advantage) adv.push_back(layer_to_json(l));
  j["trunk"] = std::move(trunk);
  j["value"] = std::move(value);
  j["advantage"] = std::move(adv);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
  out << j.dump() << "\n";
}

std::pair<QNetwork, CheckpointMeta> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "dynlight-checkpoint")
    throw FormatError("'" + path + "' is not a checkpoint file");

  QNetwork net;
  net.block_dim = j.at("block_dim").get<int>();
  net.block_count = j.at("block_count").get<int>();
  net.actions = j.at("actions").get<int>();
  net.embed = layer_from_json(j.at("embed"));
  for (const auto& l : j.at("trunk")) net.trunk.push_back(layer_from_json(l));
  for (const auto& l : j.at("value")) net.value.push_back(layer_from_json(l));
  for (const auto& l : j.at("advantage"))
    net.advantage.push_back(layer_from_json(l));

  CheckpointMeta meta;
  const json& m = j.at("meta");
  meta.encoder = m.value("encoder", "");
  meta.duration_set_name = m.value("duration_set_name", "");
  meta.durations = m.value("durations", std::vector<int>{});
  meta.phases = m.value("phases", 4);
  meta.config_hash = m.value("config_hash", uint64_t{0});

  if (static_cast<int>(meta.durations.size()) != net.actions)
    throw FormatError("checkpoint '" + path +
                      "': duration set size does not match action count");
  return {std::move(net), std::move(meta)};
}

}  // namespace dynlight
