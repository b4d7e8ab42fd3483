#pragma once

// Two-hidden-layer tanh MLP with three linear heads (sensor logits, velocity
// logits, state value), stored as one flat parameter array.
//
// Flat layout, in order (all matrices row-major, rows = output units):
//
//   W1  hidden1 x inputs      b1  hidden1
//   W2  hidden2 x hidden1     b2  hidden2
//   Ws  sensors x hidden2     bs  sensors
//   Wv  vel_bins x hidden2    bv  vel_bins
//   Wc  1 x hidden2           bc  1
//
// The trunk is shared by all heads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frsicl/rng.hpp"

namespace frsicl::ppo {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MlpShape {
  std::size_t inputs = 0;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  std::size_t sensors = 0;
  std::size_t velocity_bins = 5;

  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + hidden1 * inputs; }
  std::size_t w2() const { return b1() + hidden1; }
  std::size_t b2() const { return w2() + hidden2 * hidden1; }
  std::size_t ws() const { return b2() + hidden2; }
  std::size_t bs() const { return ws() + sensors * hidden2; }
  std::size_t wv() const { return bs() + sensors; }
  std::size_t bv() const { return wv() + velocity_bins * hidden2; }
  std::size_t wc() const { return bv() + velocity_bins; }
  std::size_t bc() const { return wc() + hidden2; }
  std::size_t size() const { return bc() + 1; }

  /// First parameter index of the policy heads (Ws..bv) and of the value head.
  std::size_t policy_head_begin() const { return ws(); }
  std::size_t value_head_begin() const { return wc(); }

  bool operator==(const MlpShape&) const = default;
};

struct MlpParams {
  MlpShape shape;
  std::vector<double> values;

  MlpParams() = default;
  explicit MlpParams(MlpShape s) : shape(s), values(s.size(), 0.0) {}
};

/// Glorot-uniform trunk and value head; policy heads scaled by 0.01 so the
/// initial policy is close to uniform. Biases start at zero.
inline MlpParams init_params(const MlpShape& shape, RngStream& rng) {
  MlpParams p(shape);
  auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols, double gain) {
    const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < rows * cols; ++i) p.values[offset + i] = rng.uniform(-limit, limit);
  };
  fill(shape.w1(), shape.hidden1, shape.inputs, 1.0);
  fill(shape.w2(), shape.hidden2, shape.hidden1, 1.0);
  fill(shape.ws(), shape.sensors, shape.hidden2, 0.01);
  fill(shape.wv(), shape.velocity_bins, shape.hidden2, 0.01);
  fill(shape.wc(), 1, shape.hidden2, 1.0);
  return p;
}

struct ForwardPass {
  std::vector<double> input;
  std::vector<double> hidden1;  // post-tanh
  std::vector<double> hidden2;  // post-tanh
  std::vector<double> sensor_logits;
  std::vector<double> velocity_logits;
  double value = 0.0;
};

namespace detail {

// out[r] = b[r] + sum_c W[r, c] * x[c]
inline void affine(std::span<const double> params, std::size_t w_off, std::size_t b_off, std::size_t rows,
                   std::span<const double> x, std::vector<double>& out) {
  const std::size_t cols = x.size();
  out.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = params[b_off + r];
    const double* w = params.data() + w_off + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace detail

inline ForwardPass forward(const MlpParams& p, std::span<const double> features) {
  const MlpShape& s = p.shape;
  if (features.size() != s.inputs) {
    throw ShapeError("feature length " + std::to_string(features.size()) + " does not match network input " +
                     std::to_string(s.inputs));
  }
  if (p.values.size() != s.size()) throw ShapeError("parameter array does not match network shape");
  ForwardPass f;
  f.input.assign(features.begin(), features.end());
  detail::affine(p.values, s.w1(), s.b1(), s.hidden1, f.input, f.hidden1);
  for (double& v : f.hidden1) v = std::tanh(v);
  detail::affine(p.values, s.w2(), s.b2(), s.hidden2, f.hidden1, f.hidden2);
  for (double& v : f.hidden2) v = std::tanh(v);
  detail::affine(p.values, s.ws(), s.bs(), s.sensors, f.hidden2, f.sensor_logits);
  detail::affine(p.values, s.wv(), s.bv(), s.velocity_bins, f.hidden2, f.velocity_logits);
  std::vector<double> value;
  detail::affine(p.values, s.wc(), s.bc(), 1, f.hidden2, value);
  f.value = value[0];
  return f;
}

/// Accumulates into grad the parameter gradient of a scalar whose partial
/// derivatives with respect to this pass's outputs are given.
inline void backward(const MlpParams& p, const ForwardPass& f, std::span<const double> d_sensor_logits,
                     std::span<const double> d_velocity_logits, double d_value, std::span<double> grad) {
  const MlpShape& s = p.shape;
  const auto& w = p.values;
  const std::size_t h2 = s.hidden2;
  const std::size_t h1 = s.hidden1;

  std::vector<double> d_h2(h2, 0.0);
  auto head = [&](std::size_t w_off, std::size_t b_off, std::span<const double> d_out) {
    for (std::size_t r = 0; r < d_out.size(); ++r) {
      const double g = d_out[r];
      if (g == 0.0) continue;
      grad[b_off + r] += g;
      for (std::size_t c = 0; c < h2; ++c) {
        grad[w_off + r * h2 + c] += g * f.hidden2[c];
        d_h2[c] += g * w[w_off + r * h2 + c];
      }
    }
  };
  head(s.ws(), s.bs(), d_sensor_logits);
  head(s.wv(), s.bv(), d_velocity_logits);
  const double dv[1] = {d_value};
  head(s.wc(), s.bc(), dv);

  std::vector<double> d_z2(h2);
  for (std::size_t i = 0; i < h2; ++i) d_z2[i] = d_h2[i] * (1.0 - f.hidden2[i] * f.hidden2[i]);

  std::vector<double> d_h1(h1, 0.0);
  for (std::size_t r = 0; r < h2; ++r) {
    const double g = d_z2[r];
    grad[s.b2() + r] += g;
    for (std::size_t c = 0; c < h1; ++c) {
      grad[s.w2() + r * h1 + c] += g * f.hidden1[c];
      d_h1[c] += g * w[s.w2() + r * h1 + c];
    }
  }
  const std::size_t in = s.inputs;
  for (std::size_t r = 0; r < h1; ++r) {
    const double g = d_h1[r] * (1.0 - f.hidden1[r] * f.hidden1[r]);
    grad[s.b1() + r] += g;
    for (std::size_t c = 0; c < in; ++c) grad[s.w1() + r * in + c] += g * f.input[c];
  }
}

/// Numerically stable log-softmax.
inline std::vector<double> log_softmax(std::span<const double> logits) {
  double m = -INFINITY;
  for (double z : logits) m = std::max(m, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

}  // namespace frsicl::ppo
