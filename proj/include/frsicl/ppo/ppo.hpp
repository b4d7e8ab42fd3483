#pragma once

// Clipped-surrogate PPO with a factored categorical policy: one head picks
// the sensor, one picks a velocity bin from {0, 1/4, 1/2, 3/4, 1} * v_max.
// Reward is the negative average AoI of the frame.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frsicl/features.hpp"
#include "frsicl/ppo/mlp.hpp"
#include "frsicl/rng.hpp"
#include "frsicl/world.hpp"

namespace frsicl::ppo {

struct PpoConfig {
  double gamma = 0.9;
  double gae_lambda = 0.5;
  double clip_epsilon = 0.2;
  std::size_t epochs = 4;
  std::size_t minibatch = 64;
  double learning_rate = 3e-3;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  std::size_t episodes = 2000;
  std::size_t steps_per_episode = 30;
  std::size_t hidden = 64;
  /// Global gradient-norm clip; 0 disables.
  double max_grad_norm = 0.5;
  /// Multiplies rewards before advantage estimation, so the value head
  /// predicts scaled returns. The buffer keeps the raw rewards.
  double reward_scale = 0.1;
};

inline void validate(const PpoConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("ppo config: " + m); };
  if (!(c.clip_epsilon > 0 && c.clip_epsilon < 1)) fail("clip_epsilon must lie in (0, 1)");
  if (!(c.gamma > 0 && c.gamma <= 1)) fail("gamma must lie in (0, 1]");
  if (!(c.gae_lambda > 0 && c.gae_lambda <= 1)) fail("gae_lambda must lie in (0, 1]");
  if (c.epochs == 0 || c.minibatch == 0 || c.steps_per_episode == 0 || c.hidden == 0) {
    fail("epochs, minibatch, steps_per_episode and hidden must be positive");
  }
  if (!(c.learning_rate > 0)) fail("learning_rate must be positive");
}

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline MlpShape network_shape(const WorldConfig& cfg, std::size_t hidden = 64) {
  return {feature_length(cfg.n_sensors), hidden, hidden, cfg.n_sensors, 5};
}

// ---------------------------------------------------------------------------
// Action sampling

struct SampledAction {
  std::size_t sensor_index = 0;    // 0-based
  std::size_t velocity_index = 0;  // 0-based bin
  double log_prob = 0.0;           // joint
};

namespace detail {

inline std::size_t sample_categorical(std::span<const double> log_probs, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    cum += std::exp(log_probs[i]);
    if (u < cum) return i;
  }
  return log_probs.size() - 1;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

}  // namespace detail

/// Independent draws from the two heads; log_prob is the sum of head log-probs.
inline SampledAction sample_action(std::span<const double> sensor_logits, std::span<const double> velocity_logits,
                                   RngStream& rng) {
  const auto ls = log_softmax(sensor_logits);
  const auto lv = log_softmax(velocity_logits);
  SampledAction a;
  a.sensor_index = detail::sample_categorical(ls, rng);
  a.velocity_index = detail::sample_categorical(lv, rng);
  a.log_prob = ls[a.sensor_index] + lv[a.velocity_index];
  return a;
}

/// Argmax of each head, lowest index on ties.
inline SampledAction greedy_action(std::span<const double> sensor_logits, std::span<const double> velocity_logits) {
  const auto ls = log_softmax(sensor_logits);
  const auto lv = log_softmax(velocity_logits);
  SampledAction a;
  a.sensor_index = detail::argmax(sensor_logits);
  a.velocity_index = detail::argmax(velocity_logits);
  a.log_prob = ls[a.sensor_index] + lv[a.velocity_index];
  return a;
}

// ---------------------------------------------------------------------------
// Advantages

struct TrajectoryBuffer {
  std::vector<FeatureVector> features;
  std::vector<std::size_t> sensor_actions;
  std::vector<std::size_t> velocity_actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<bool> dones;

  std::size_t size() const { return rewards.size(); }
  void clear() { *this = TrajectoryBuffer{}; }
};

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalised advantage estimation. delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t,
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}, returns = A + V. bootstrap
/// is V after the last entry when that entry is not terminal. Not normalised.
inline Advantages gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                 const std::vector<bool>& dones, double gamma, double lambda,
                                 double bootstrap = 0.0) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ShapeError("gae: buffer lengths differ");
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double not_done = dones[k] ? 0.0 : 1.0;
    const double next_value = k + 1 < n ? values[k + 1] : bootstrap;
    const double delta = rewards[k] + gamma * next_value * not_done - values[k];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
  }
  return out;
}

inline Advantages gae_advantages(const TrajectoryBuffer& buf, double gamma, double lambda) {
  return gae_advantages(buf.rewards, buf.values, buf.dones, gamma, lambda);
}

/// Shifts to zero mean and, when there is more than one sample with nonzero
/// spread, scales to unit (population) standard deviation.
inline void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double& a : adv) {
    a -= mean;
    var += a * a;
  }
  var /= n;
  if (adv.size() > 1 && var > 0.0) {
    const double inv = 1.0 / std::sqrt(var);
    for (double& a : adv) a *= inv;
  }
}

// ---------------------------------------------------------------------------
// Loss and gradient

struct Minibatch {
  std::vector<FeatureVector> features;
  std::vector<std::size_t> sensor_actions;
  std::vector<std::size_t> velocity_actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return features.size(); }
};

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;   // -mean(min(rho A, clip(rho) A))
  double value = 0.0;    // mean((V - R)^2), before the coefficient
  double entropy = 0.0;  // mean joint entropy, before the coefficient
};

inline double entropy_of(std::span<const double> log_probs) {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

namespace detail {

// Shared by the loss and its gradient; grad may be empty.
inline LossTerms evaluate_loss(const MlpParams& params, const Minibatch& mb, const PpoConfig& cfg,
                               std::span<double> grad) {
  const std::size_t b = mb.size();
  if (b == 0) throw ShapeError("empty minibatch");
  if (mb.sensor_actions.size() != b || mb.velocity_actions.size() != b || mb.old_log_probs.size() != b ||
      mb.advantages.size() != b || mb.returns.size() != b) {
    throw ShapeError("minibatch fields have different lengths");
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  const double lo = 1.0 - cfg.clip_epsilon;
  const double hi = 1.0 + cfg.clip_epsilon;
  LossTerms terms;
  std::vector<double> d_s, d_v;
  for (std::size_t i = 0; i < b; ++i) {
    const ForwardPass f = forward(params, mb.features[i]);
    const auto ls = log_softmax(f.sensor_logits);
    const auto lv = log_softmax(f.velocity_logits);
    const std::size_t as = mb.sensor_actions[i];
    const std::size_t av = mb.velocity_actions[i];
    if (as >= ls.size() || av >= lv.size()) throw ShapeError("action index out of range");
    const double logp = ls[as] + lv[av];
    const double ratio = std::exp(logp - mb.old_log_probs[i]);
    const double adv = mb.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    const bool use_unclipped = unclipped <= clipped;
    terms.policy -= (use_unclipped ? unclipped : clipped) * inv_b;

    const double h_s = entropy_of(ls);
    const double h_v = entropy_of(lv);
    terms.entropy += (h_s + h_v) * inv_b;
    const double err = f.value - mb.returns[i];
    terms.value += err * err * inv_b;

    if (grad.empty()) continue;
    // d(policy term)/d(logp): the clipped branch is constant in the parameters.
    const double g_logp = use_unclipped ? -unclipped * inv_b : 0.0;
    const double g_ent = -cfg.entropy_coef * inv_b;  // d(total)/d(H)
    auto head_grad = [&](const std::vector<double>& logp_head, std::size_t chosen, double h, std::vector<double>& out) {
      out.resize(logp_head.size());
      for (std::size_t k = 0; k < logp_head.size(); ++k) {
        const double p = std::exp(logp_head[k]);
        const double d_logp = (k == chosen ? 1.0 : 0.0) - p;
        const double d_h = -p * (logp_head[k] + h);
        out[k] = g_logp * d_logp + g_ent * d_h;
      }
    };
    head_grad(ls, as, h_s, d_s);
    head_grad(lv, av, h_v, d_v);
    const double d_value = 2.0 * cfg.value_coef * err * inv_b;
    backward(params, f, d_s, d_v, d_value, grad);
  }
  terms.total = terms.policy + cfg.value_coef * terms.value - cfg.entropy_coef * terms.entropy;
  return terms;
}

}  // namespace detail

inline LossTerms ppo_loss(const MlpParams& params, const Minibatch& mb, const PpoConfig& cfg) {
  return detail::evaluate_loss(params, mb, cfg, {});
}

struct LossGradient {
  LossTerms loss;
  std::vector<double> grad;
};

/// Exact gradient of ppo_loss with respect to every parameter.
inline LossGradient ppo_gradient(const MlpParams& params, const Minibatch& mb, const PpoConfig& cfg) {
  LossGradient out;
  out.grad.assign(params.values.size(), 0.0);
  out.loss = detail::evaluate_loss(params, mb, cfg, out.grad);
  if (!std::isfinite(out.loss.total)) throw TrainingDiverged("non-finite PPO loss");
  for (double g : out.grad) {
    if (!std::isfinite(g)) throw TrainingDiverged("non-finite PPO gradient");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                        const AdamHyper& h = {}) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter and gradient sizes differ");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

// ---------------------------------------------------------------------------
// Policy wrapper and evaluation

class PpoPolicy final : public Policy {
 public:
  PpoPolicy(MlpParams params, WorldConfig cfg, bool greedy)
      : params_(std::move(params)), cfg_(std::move(cfg)), greedy_(greedy), bins_(velocity_bins(cfg_)) {
    if (params_.shape.sensors != cfg_.n_sensors || params_.shape.inputs != feature_length(cfg_.n_sensors)) {
      throw ShapeError("PPO parameters were trained for " + std::to_string(params_.shape.sensors) +
                       " sensors, world has " + std::to_string(cfg_.n_sensors));
    }
  }

  std::string name() const override { return "ppo"; }

  Action decide(const Observation& obs, RngStream& rng) override {
    const ForwardPass f = forward(params_, make_features(obs, cfg_));
    last_ = greedy_ ? greedy_action(f.sensor_logits, f.velocity_logits)
                    : sample_action(f.sensor_logits, f.velocity_logits, rng);
    last_value_ = f.value;
    return {last_.sensor_index + 1, bins_[last_.velocity_index]};
  }

  const SampledAction& last_sample() const noexcept { return last_; }
  double last_value() const noexcept { return last_value_; }
  const MlpParams& params() const noexcept { return params_; }

 private:
  MlpParams params_;
  WorldConfig cfg_;
  bool greedy_;
  std::vector<double> bins_;
  SampledAction last_;
  double last_value_ = 0.0;
};

inline RunSummary evaluate(const MlpParams& params, World& world, bool greedy, RngStream& rng,
                           std::string run_id = {}) {
  PpoPolicy policy(params, world.cfg, greedy);
  return run_episode(world, policy, rng, std::move(run_id));
}

inline RunSummary evaluate(const MlpParams& params, World& world, bool greedy) {
  RngStream rng(world.cfg.seed, "policy");
  return evaluate(params, world, greedy, rng);
}

// ---------------------------------------------------------------------------
// Training

struct CurveRow {
  std::size_t episode = 0;  // 1-based
  double mean_reward = 0.0;
  double mean_aoi = 0.0;
  bool operator==(const CurveRow&) const = default;
};

struct TrainResult {
  MlpParams params;
  std::vector<CurveRow> curve;
};

using WorldFactory = std::function<World(std::size_t episode)>;

/// Same sensor layout every episode (the layout seed), fresh link draws per episode.
inline WorldFactory fixed_layout_factory(WorldConfig cfg, std::uint64_t layout_seed) {
  return [cfg = std::move(cfg), layout_seed](std::size_t episode) {
    World w = init_world(cfg, layout_seed);
    w.rng = RngStream(layout_seed, "link/episode-" + std::to_string(episode));
    return w;
  };
}

inline double global_norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

/// One episode per update cycle, then `epochs` passes of shuffled minibatches.
/// on_episode, when set, is called after each episode's update.
inline TrainResult train(const WorldConfig& world_cfg, const WorldFactory& factory, const PpoConfig& cfg,
                         std::uint64_t seed, const std::function<void(const CurveRow&)>& on_episode = {}) {
  validate(cfg);
  validate_config(world_cfg);
  RngStream init_rng(seed, "ppo/init");
  RngStream sample_rng(seed, "ppo/sample");
  RngStream shuffle_rng(seed, "ppo/shuffle");

  TrainResult result;
  result.params = init_params(network_shape(world_cfg, cfg.hidden), init_rng);
  MlpParams& params = result.params;
  AdamState adam;
  const std::vector<double> bins = velocity_bins(world_cfg);
  TrajectoryBuffer buf;

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    World w = factory(ep);
    if (w.sensors.size() != params.shape.sensors) throw ShapeError("world factory changed the sensor count");
    buf.clear();
    while (!w.done()) {
      const Observation obs = observe(w);
      FeatureVector feat = make_features(obs, w.cfg);
      const ForwardPass f = forward(params, feat);
      const SampledAction a = sample_action(f.sensor_logits, f.velocity_logits, sample_rng);
      const StepRecord rec = step(w, Action{a.sensor_index + 1, bins[a.velocity_index]});
      buf.features.push_back(std::move(feat));
      buf.sensor_actions.push_back(a.sensor_index);
      buf.velocity_actions.push_back(a.velocity_index);
      buf.log_probs.push_back(a.log_prob);
      buf.values.push_back(f.value);
      buf.rewards.push_back(-rec.avg_aoi_s);
      buf.dones.push_back(false);
    }
    // The horizon is a time limit, not a terminal state: the features carry no
    // time-to-go, so the tail is bootstrapped from the value of the final state.
    const double bootstrap = forward(params, make_features(observe(w), w.cfg)).value;
    std::vector<double> scaled(buf.rewards);
    for (double& r : scaled) r *= cfg.reward_scale;
    Advantages adv = gae_advantages(scaled, buf.values, buf.dones, cfg.gamma, cfg.gae_lambda, bootstrap);
    normalize_advantages(adv.advantages);

    std::vector<std::size_t> order(buf.size());
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[shuffle_rng.uniform_index(k)]);
      for (std::size_t start = 0; start < order.size(); start += cfg.minibatch) {
        const std::size_t end = std::min(order.size(), start + cfg.minibatch);
        Minibatch mb;
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t i = order[k];
          mb.features.push_back(buf.features[i]);
          mb.sensor_actions.push_back(buf.sensor_actions[i]);
          mb.velocity_actions.push_back(buf.velocity_actions[i]);
          mb.old_log_probs.push_back(buf.log_probs[i]);
          mb.advantages.push_back(adv.advantages[i]);
          mb.returns.push_back(adv.returns[i]);
        }
        LossGradient lg = ppo_gradient(params, mb, cfg);
        if (cfg.max_grad_norm > 0) {
          const double norm = global_norm(lg.grad);
          if (norm > cfg.max_grad_norm) {
            const double scale = cfg.max_grad_norm / norm;
            for (double& g : lg.grad) g *= scale;
          }
        }
        adam_update(params.values, lg.grad, adam, cfg.learning_rate);
      }
    }

    CurveRow row;
    row.episode = ep + 1;
    row.mean_reward = std::accumulate(buf.rewards.begin(), buf.rewards.end(), 0.0) / static_cast<double>(buf.size());
    row.mean_aoi = summarize(w).time_avg_aoi_s;
    result.curve.push_back(row);
    if (on_episode) on_episode(row);
  }
  for (double v : params.values) {
    if (!std::isfinite(v)) throw TrainingDiverged("non-finite parameters after training");
  }
  return result;
}

}  // namespace frsicl::ppo
