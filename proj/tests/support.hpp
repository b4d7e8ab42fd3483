#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <cmath>
#include <vector>

#include "frsicl/ppo/ppo.hpp"

namespace frsicl::testing {

struct GradCase {
  ppo::MlpParams params;
  ppo::Minibatch batch;
  ppo::PpoConfig cfg;
};

/// A random small network with a random minibatch. Old log-probs are set so
/// every ratio sits in [0.5, 1.5] but at least 1e-2 away from the clip edges,
/// where the loss is not differentiable.
inline GradCase random_grad_case(RngStream& rng) {
  GradCase c;
  ppo::MlpShape shape;
  shape.inputs = 2 + rng.uniform_index(6);
  shape.hidden1 = 2 + rng.uniform_index(6);
  shape.hidden2 = 2 + rng.uniform_index(6);
  shape.sensors = 2 + rng.uniform_index(5);
  shape.velocity_bins = 5;
  c.params = ppo::MlpParams(shape);
  for (double& v : c.params.values) v = rng.uniform(-1, 1);
  c.cfg.clip_epsilon = 0.2;
  c.cfg.value_coef = rng.uniform(0.1, 1.0);
  c.cfg.entropy_coef = rng.uniform(0.0, 0.1);
  const std::size_t b = 1 + rng.uniform_index(8);
  for (std::size_t i = 0; i < b; ++i) {
    FeatureVector f(shape.inputs);
    for (double& x : f) x = rng.uniform(-1.5, 1.5);
    const auto fp = ppo::forward(c.params, f);
    const std::size_t as = rng.uniform_index(shape.sensors);
    const std::size_t av = rng.uniform_index(shape.velocity_bins);
    const double logp = ppo::log_softmax(fp.sensor_logits)[as] + ppo::log_softmax(fp.velocity_logits)[av];
    double ratio;
    do {
      ratio = rng.uniform(0.5, 1.5);
    } while (std::abs(ratio - 0.8) < 1e-2 || std::abs(ratio - 1.2) < 1e-2);
    c.batch.features.push_back(std::move(f));
    c.batch.sensor_actions.push_back(as);
    c.batch.velocity_actions.push_back(av);
    c.batch.old_log_probs.push_back(logp - std::log(ratio));
    c.batch.advantages.push_back(rng.uniform(-2, 2));
    c.batch.returns.push_back(rng.uniform(-3, 3));
  }
  return c;
}

/// ||analytic - numeric|| / max(||analytic||, ||numeric||), central differences.
inline double gradient_relative_error(const GradCase& c, double h = 1e-5) {
  const std::vector<double> analytic = ppo::ppo_gradient(c.params, c.batch, c.cfg).grad;
  ppo::MlpParams p = c.params;
  double diff = 0, na = 0, nn = 0;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    const double saved = p.values[k];
    p.values[k] = saved + h;
    const double up = ppo::ppo_loss(p, c.batch, c.cfg).total;
    p.values[k] = saved - h;
    const double down = ppo::ppo_loss(p, c.batch, c.cfg).total;
    p.values[k] = saved;
    const double numeric = (up - down) / (2 * h);
    diff += (analytic[k] - numeric) * (analytic[k] - numeric);
    na += analytic[k] * analytic[k];
    nn += numeric * numeric;
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / scale;
}

}  // namespace frsicl::testing
