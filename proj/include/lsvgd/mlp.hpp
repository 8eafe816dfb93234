#pragma once

// Multilayer perceptron surrogate: forward pass, reverse-mode parameter
// gradients, input Jacobians, and Adam training.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsvgd/error.hpp"

namespace lsvgd {

enum class Activation { swish, identity };

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double swish(double z) noexcept { return z * sigmoid(z); }

inline double swish_derivative(double z) noexcept {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

struct Architecture {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden{20, 20, 20};
  Activation activation = Activation::swish;

  void validate() const {
    detail::require(input_dim >= 1 && output_dim >= 1, "architecture dims must be >= 1");
    detail::require(!hidden.empty(), "architecture needs at least one hidden layer");
    for (int w : hidden) detail::require(w >= 1, "hidden widths must be >= 1");
  }

  /// Fan-out of layer k (k = 0 is the first hidden layer, the last is the output).
  int layer_out(std::size_t k) const {
    return k < hidden.size() ? hidden[k] : output_dim;
  }
  int layer_in(std::size_t k) const { return k == 0 ? input_dim : hidden[k - 1]; }
  std::size_t num_layers() const { return hidden.size() + 1; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Weights, biases, and the fixed affine maps around the network:
///   f(x) = out_shift + out_scale .* net((x - in_shift) .* in_scale).
struct SurrogateParams {
  Architecture arch;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd in_shift;
  Eigen::VectorXd in_scale;
  Eigen::VectorXd out_shift;
  Eigen::VectorXd out_scale;

  /// Throws if any layer shape breaks the architecture chain.
  void validate() const {
    arch.validate();
    const std::size_t L = arch.num_layers();
    detail::require(weights.size() == L && biases.size() == L, "layer count does not match architecture");
    for (std::size_t k = 0; k < L; ++k) {
      detail::require(weights[k].rows() == arch.layer_out(k) && weights[k].cols() == arch.layer_in(k),
                      "weight shape mismatch at layer " + std::to_string(k));
      detail::require(biases[k].size() == arch.layer_out(k),
                      "bias shape mismatch at layer " + std::to_string(k));
    }
    detail::require(in_shift.size() == arch.input_dim && in_scale.size() == arch.input_dim,
                    "input map size mismatch");
    detail::require(out_shift.size() == arch.output_dim && out_scale.size() == arch.output_dim,
                    "output map size mismatch");
  }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
    return n;
  }

  /// Squared Euclidean norm of all weights and biases (the maps are excluded).
  double squared_norm() const {
    double s = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      s += weights[k].squaredNorm() + biases[k].squaredNorm();
    }
    return s;
  }

  /// Same shapes, all weights and biases zero, maps copied.
  SurrogateParams zeros_like() const {
    SurrogateParams z = *this;
    for (auto& w : z.weights) w.setZero();
    for (auto& b : z.biases) b.setZero();
    return z;
  }
};

struct TrainingSet {
  Eigen::MatrixXd inputs;   // n_t x d
  Eigen::MatrixXd outputs;  // n_t x n

  Eigen::Index size() const noexcept { return inputs.rows(); }

  void validate() const {
    detail::require(inputs.rows() >= 1, "training set must be non-empty");
    detail::require(inputs.rows() == outputs.rows(), "training inputs/outputs row count mismatch");
  }

  void append(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    detail::require(inputs.rows() == 0 || (x.size() == inputs.cols() && y.size() == outputs.cols()),
                    "appended pair has the wrong dimension");
    inputs.conservativeResize(inputs.rows() + 1, x.size());
    outputs.conservativeResize(outputs.rows() + 1, y.size());
    inputs.row(inputs.rows() - 1) = x.transpose();
    outputs.row(outputs.rows() - 1) = y.transpose();
  }
};

struct TrainConfig {
  double learning_rate = 5e-4;
  double reg_constant = 1e-6;
  int epochs = 5000;
  int batch_size = 32;
  int full_batch_threshold = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Stop as soon as the full-set loss is <= this value (checked once per epoch); 0 disables.
  double target_loss = 0.0;
};

struct TrainResult {
  SurrogateParams params;
  bool improved = true;  // false when the guard rejected training and returned the input params
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs_run = 0;
};

namespace detail {

inline double activate(Activation a, double z) noexcept {
  return a == Activation::swish ? swish(z) : z;
}
inline double activate_derivative(Activation a, double z) noexcept {
  return a == Activation::swish ? swish_derivative(z) : 1.0;
}

inline Eigen::MatrixXd standardize_inputs(const SurrogateParams& p, const Eigen::MatrixXd& x_rows) {
  detail::require(x_rows.cols() == p.arch.input_dim,
                  "input dimension " + std::to_string(x_rows.cols()) + " does not match network input " +
                      std::to_string(p.arch.input_dim));
  return ((x_rows.rowwise() - p.in_shift.transpose()).array().rowwise() * p.in_scale.transpose().array())
      .matrix()
      .transpose();
}

// Targets in normalized output space (columns are samples).
inline Eigen::MatrixXd normalize_outputs(const SurrogateParams& p, const Eigen::MatrixXd& y_rows) {
  detail::require(y_rows.cols() == p.arch.output_dim, "output dimension does not match network output");
  return ((y_rows.rowwise() - p.out_shift.transpose()).array().rowwise() / p.out_scale.transpose().array())
      .matrix()
      .transpose();
}

// Pre-activations of every layer for a batch whose columns are standardized inputs.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // pre[k] = W_k z_{k-1} + b_k
  std::vector<Eigen::MatrixXd> post;  // post[0] = input, post[k+1] = sigma(pre[k]) for hidden k
  Eigen::MatrixXd output;             // normalized network output
};

inline ForwardCache forward_batch(const SurrogateParams& p, Eigen::MatrixXd z0) {
  const std::size_t L = p.arch.num_layers();
  ForwardCache c;
  c.pre.reserve(L);
  c.post.reserve(L);
  c.post.push_back(std::move(z0));
  for (std::size_t k = 0; k < L; ++k) {
    Eigen::MatrixXd a = p.weights[k] * c.post.back();
    a.colwise() += p.biases[k];
    if (k + 1 == L) {
      c.output = a;
      c.pre.push_back(std::move(a));
    } else {
      const Activation act = p.arch.activation;
      c.post.push_back(a.unaryExpr([act](double v) { return activate(act, v); }));
      c.pre.push_back(std::move(a));
    }
  }
  return c;
}

struct ParamGrad {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Gradient of (scale) * sum_samples ||t - o||^2 through the cached forward pass.
inline ParamGrad backward_batch(const SurrogateParams& p, const ForwardCache& c,
                                const Eigen::MatrixXd& targets, double scale) {
  const std::size_t L = p.arch.num_layers();
  ParamGrad g;
  g.weights.resize(L);
  g.biases.resize(L);
  Eigen::MatrixXd delta = (-2.0 * scale) * (targets - c.output);
  for (std::size_t k = L; k-- > 0;) {
    g.weights[k].noalias() = delta * c.post[k].transpose();
    g.biases[k] = delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd back = p.weights[k].transpose() * delta;
    const Activation act = p.arch.activation;
    delta = back.cwiseProduct(c.pre[k - 1].unaryExpr([act](double v) { return activate_derivative(act, v); }));
  }
  return g;
}

}  // namespace detail

inline SurrogateParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  SurrogateParams p;
  p.arch = arch;
  for (std::size_t k = 0; k < arch.num_layers(); ++k) {
    const int fan_in = arch.layer_in(k);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    Eigen::MatrixXd w(arch.layer_out(k), fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(arch.layer_out(k)));
  }
  p.in_shift = Eigen::VectorXd::Zero(arch.input_dim);
  p.in_scale = Eigen::VectorXd::Ones(arch.input_dim);
  p.out_shift = Eigen::VectorXd::Zero(arch.output_dim);
  p.out_scale = Eigen::VectorXd::Ones(arch.output_dim);
  return p;
}

/// Sets the output map to the per-component mean and std of `outputs` (std floored).
inline void fit_output_map(SurrogateParams& p, const Eigen::MatrixXd& outputs, double floor = 1e-8) {
  detail::require(outputs.cols() == p.arch.output_dim && outputs.rows() >= 1, "output map data mismatch");
  p.out_shift = outputs.colwise().mean().transpose();
  Eigen::VectorXd sd(outputs.cols());
  for (Eigen::Index j = 0; j < outputs.cols(); ++j) {
    const double var = (outputs.col(j).array() - p.out_shift[j]).square().mean();
    sd[j] = std::max(std::sqrt(var), floor);
  }
  p.out_scale = sd;
}

/// Batch forward pass; rows of `x_rows` are inputs, rows of the result are outputs.
inline Eigen::MatrixXd mlp_forward_batch(const SurrogateParams& p, const Eigen::MatrixXd& x_rows) {
  p.validate();
  auto c = detail::forward_batch(p, detail::standardize_inputs(p, x_rows));
  Eigen::MatrixXd y = c.output.transpose();
  return ((y.array().rowwise() * p.out_scale.transpose().array()).rowwise() + p.out_shift.transpose().array())
      .matrix();
}

inline Eigen::VectorXd mlp_forward(const SurrogateParams& p, const Eigen::VectorXd& x) {
  detail::require(x.size() == p.arch.input_dim, "input dimension " + std::to_string(x.size()) +
                                                    " does not match network input " +
                                                    std::to_string(p.arch.input_dim));
  return mlp_forward_batch(p, x.transpose()).row(0).transpose();
}

/// Mean squared residual in normalized output units plus beta * ||theta||^2.
/// With the identity output map this is (1/n_t) sum ||y_i - f(x_i)||^2 + beta ||theta||^2.
inline double loss(const SurrogateParams& p, const TrainingSet& data, double beta) {
  data.validate();
  p.validate();
  auto c = detail::forward_batch(p, detail::standardize_inputs(p, data.inputs));
  const Eigen::MatrixXd t = detail::normalize_outputs(p, data.outputs);
  return (t - c.output).squaredNorm() / static_cast<double>(data.size()) + beta * p.squared_norm();
}

/// Exact gradient of `loss` with respect to every weight and bias.
inline SurrogateParams param_gradient(const SurrogateParams& p, const TrainingSet& data, double beta) {
  data.validate();
  p.validate();
  auto c = detail::forward_batch(p, detail::standardize_inputs(p, data.inputs));
  const Eigen::MatrixXd t = detail::normalize_outputs(p, data.outputs);
  auto g = detail::backward_batch(p, c, t, 1.0 / static_cast<double>(data.size()));
  SurrogateParams out = p;
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    out.weights[k] = g.weights[k] + 2.0 * beta * p.weights[k];
    out.biases[k] = g.biases[k] + 2.0 * beta * p.biases[k];
  }
  return out;
}

/// n x d Jacobian of f at x, by forward-mode propagation of the input basis.
inline Eigen::MatrixXd input_jacobian(const SurrogateParams& p, const Eigen::VectorXd& x) {
  detail::require(x.size() == p.arch.input_dim, "input dimension mismatch in input_jacobian");
  p.validate();
  auto c = detail::forward_batch(p, detail::standardize_inputs(p, x.transpose()));
  Eigen::MatrixXd j = p.in_scale.asDiagonal();
  const std::size_t L = p.arch.num_layers();
  for (std::size_t k = 0; k < L; ++k) {
    Eigen::MatrixXd next = p.weights[k] * j;
    if (k + 1 < L) {
      for (Eigen::Index r = 0; r < next.rows(); ++r) {
        next.row(r) *= detail::activate_derivative(p.arch.activation, c.pre[k](r, 0));
      }
    }
    j = std::move(next);
  }
  return p.out_scale.asDiagonal() * j;
}

/// Network value at x together with J(x)^T w, by one reverse sweep.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> value_and_vjp(const SurrogateParams& p,
                                                                 const Eigen::VectorXd& x,
                                                                 const Eigen::VectorXd& w) {
  detail::require(x.size() == p.arch.input_dim, "input dimension mismatch in vjp");
  detail::require(w.size() == p.arch.output_dim, "cotangent dimension mismatch in vjp");
  auto c = detail::forward_batch(p, detail::standardize_inputs(p, x.transpose()));
  Eigen::VectorXd value = p.out_shift + p.out_scale.cwiseProduct(c.output.col(0));
  Eigen::VectorXd g = p.out_scale.cwiseProduct(w);
  for (std::size_t k = p.arch.num_layers(); k-- > 0;) {
    g = p.weights[k].transpose() * g;
    if (k == 0) break;
    for (Eigen::Index r = 0; r < g.size(); ++r) {
      g[r] *= detail::activate_derivative(p.arch.activation, c.pre[k - 1](r, 0));
    }
  }
  return {std::move(value), p.in_scale.cwiseProduct(g)};
}

namespace detail {

struct AdamMoments {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;

  explicit AdamMoments(const SurrogateParams& p) {
    for (std::size_t k = 0; k < p.weights.size(); ++k) {
      mw.push_back(Eigen::MatrixXd::Zero(p.weights[k].rows(), p.weights[k].cols()));
      vw.push_back(mw.back());
      mb.push_back(Eigen::VectorXd::Zero(p.biases[k].size()));
      vb.push_back(mb.back());
    }
  }
};

template <typename Param, typename Grad>
void adam_update(Param& theta, const Grad& g, Param& m, Param& v, const TrainConfig& cfg, double bc1,
                 double bc2) {
  m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
  v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
  theta.array() -= cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
}

}  // namespace detail

/// Minibatch Adam on shuffled data. Returns the initial parameters unchanged
/// (improved = false) if training did not lower the full-set loss.
inline TrainResult train(const SurrogateParams& init, const TrainingSet& data, const TrainConfig& cfg,
                         std::uint64_t seed) {
  data.validate();
  init.validate();
  TrainResult res;
  res.params = init;
  res.initial_loss = loss(init, data, cfg.reg_constant);
  res.final_loss = res.initial_loss;
  if (cfg.epochs <= 0) return res;
  if (cfg.target_loss > 0.0 && res.initial_loss <= cfg.target_loss) return res;

  const Eigen::Index n = data.size();
  const Eigen::Index batch =
      n <= cfg.full_batch_threshold ? n : std::clamp<Eigen::Index>(cfg.batch_size, 1, n);
  const Eigen::MatrixXd z_all = detail::standardize_inputs(init, data.inputs);
  const Eigen::MatrixXd t_all = detail::normalize_outputs(init, data.outputs);

  SurrogateParams p = init;
  detail::AdamMoments mom(p);
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  long step = 0;
  Eigen::MatrixXd zb, tb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      if (batch == n) {
        zb = z_all;
        tb = t_all;
      } else {
        zb.resize(z_all.rows(), len);
        tb.resize(t_all.rows(), len);
        for (Eigen::Index b = 0; b < len; ++b) {
          zb.col(b) = z_all.col(order[static_cast<std::size_t>(start + b)]);
          tb.col(b) = t_all.col(order[static_cast<std::size_t>(start + b)]);
        }
      }
      auto c = detail::forward_batch(p, zb);
      auto g = detail::backward_batch(p, c, tb, 1.0 / static_cast<double>(len));
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < p.weights.size(); ++k) {
        const Eigen::MatrixXd gw = g.weights[k] + 2.0 * cfg.reg_constant * p.weights[k];
        const Eigen::VectorXd gb = g.biases[k] + 2.0 * cfg.reg_constant * p.biases[k];
        detail::adam_update(p.weights[k], gw, mom.mw[k], mom.vw[k], cfg, bc1, bc2);
        detail::adam_update(p.biases[k], gb, mom.mb[k], mom.vb[k], cfg, bc1, bc2);
      }
    }
    res.epochs_run = epoch + 1;
    if (cfg.target_loss > 0.0 && loss(p, data, cfg.reg_constant) <= cfg.target_loss) break;
  }

  const double final_loss = loss(p, data, cfg.reg_constant);
  if (final_loss <= res.initial_loss && std::isfinite(final_loss)) {
    res.params = std::move(p);
    res.final_loss = final_loss;
  } else {
    res.improved = false;
  }
  return res;
}

/// Refinement retraining always starts from the previous surrogate.
inline TrainResult warm_start_refine(const SurrogateParams& pretrained, const TrainingSet& data,
                                     const TrainConfig& cfg, std::uint64_t seed) {
  return train(pretrained, data, cfg, seed);
}

}  // namespace lsvgd
