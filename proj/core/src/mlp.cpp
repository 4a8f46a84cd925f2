#include "sqt/mlp.hpp"

#include <cmath>
#include <string>

#include "sqt/error.hpp"

namespace sqt {

namespace {

void check_architecture(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw ConfigError("mlp_init: need at least input and output layers");
  for (int n : layer_sizes)
    if (n < 1)
      throw ConfigError("mlp_init: layer sizes must be positive, got " +
                        std::to_string(n));
}

Eigen::MatrixXd apply_hidden(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kRelu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

}  // namespace

MlpParams mlp_init(Rng& rng, const std::vector<int>& layer_sizes,
                   Activation hidden_activation) {
  check_architecture(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  p.hidden_activation = hidden_activation;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const int rows = layer_sizes[k + 1];
    const int cols = layer_sizes[k];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(rows));
  }
  return p;
}

Eigen::MatrixXd mlp_forward(const MlpParams& params,
                            const Eigen::MatrixXd& input,
                            OutputActivation output_activation,
                            MlpCache* cache) {
  if (input.rows() != params.input_dim())
    throw ShapeError("mlp_forward: input has " + std::to_string(input.rows()) +
                     " rows, expected " + std::to_string(params.input_dim()));
  if (cache) {
    cache->output_activation = output_activation;
    cache->input = input;
    cache->activations.clear();
  }
  Eigen::MatrixXd h = input;
  const int last = params.num_layers() - 1;
  for (int k = 0; k <= last; ++k) {
    Eigen::MatrixXd z =
        (params.weights[k] * h).colwise() + params.biases[k];
    if (k < last)
      h = apply_hidden(z, params.hidden_activation);
    else if (output_activation == OutputActivation::kTanh)
      h = z.array().tanh().matrix();
    else
      h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

Eigen::VectorXd mlp_forward(const MlpParams& params,
                            const Eigen::VectorXd& input,
                            OutputActivation output_activation) {
  return mlp_forward(params, Eigen::MatrixXd(input), output_activation)
      .col(0);
}

MlpGradients zero_gradients(const MlpParams& params) {
  MlpGradients g;
  for (int k = 0; k < params.num_layers(); ++k) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[k].rows(),
                                              params.weights[k].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[k].size()));
  }
  return g;
}

MlpBackprop mlp_grad(const MlpParams& params, const MlpCache& cache,
                     const Eigen::MatrixXd& upstream) {
  const int last = params.num_layers() - 1;
  if (upstream.rows() != params.output_dim())
    throw ShapeError("mlp_grad: upstream has " +
                     std::to_string(upstream.rows()) + " rows, expected " +
                     std::to_string(params.output_dim()));
  if (upstream.cols() != cache.input.cols())
    throw ShapeError("mlp_grad: upstream batch width does not match cache");

  MlpBackprop out;
  out.grads.weights.resize(last + 1);
  out.grads.biases.resize(last + 1);

  // delta = d(loss)/d(pre-activation of layer k), walked backwards.
  Eigen::MatrixXd delta;
  if (cache.output_activation == OutputActivation::kTanh) {
    const Eigen::MatrixXd& y = cache.activations[last];
    delta = upstream.cwiseProduct(
        (1.0 - y.array().square()).matrix());
  } else {
    delta = upstream;
  }
  for (int k = last; k >= 0; --k) {
    const Eigen::MatrixXd& below =
        (k == 0) ? cache.input : cache.activations[k - 1];
    out.grads.weights[k] = delta * below.transpose();
    out.grads.biases[k] = delta.rowwise().sum();
    Eigen::MatrixXd dh = params.weights[k].transpose() * delta;
    if (k == 0) {
      out.input_grad = std::move(dh);
    } else if (params.hidden_activation == Activation::kRelu) {
      delta = dh.cwiseProduct(
          (below.array() > 0.0).cast<double>().matrix());
    } else {
      delta = dh.cwiseProduct((1.0 - below.array().square()).matrix());
    }
  }
  return out;
}

MlpBackprop mlp_grad(const MlpParams& params, const Eigen::VectorXd& input,
                     const Eigen::VectorXd& upstream,
                     OutputActivation output_activation) {
  MlpCache cache;
  mlp_forward(params, Eigen::MatrixXd(input), output_activation, &cache);
  return mlp_grad(params, cache, Eigen::MatrixXd(upstream));
}

AdamState adam_init(const MlpParams& params) {
  AdamState s;
  for (int k = 0; k < params.num_layers(); ++k) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(params.weights[k].rows(),
                                                params.weights[k].cols()));
    s.v_weights.push_back(Eigen::MatrixXd::Zero(params.weights[k].rows(),
                                                params.weights[k].cols()));
    s.m_biases.push_back(Eigen::VectorXd::Zero(params.biases[k].size()));
    s.v_biases.push_back(Eigen::VectorXd::Zero(params.biases[k].size()));
  }
  return s;
}

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

std::pair<MlpParams, AdamState> adam_step(const MlpParams& params,
                                          const MlpGradients& grads,
                                          const AdamState& state, double lr) {
  if (lr <= 0.0) throw ConfigError("adam_step: lr must be positive");
  if (grads.weights.size() != params.weights.size() ||
      grads.biases.size() != params.biases.size())
    throw ShapeError("adam_step: gradient layer count mismatch");

  MlpParams p = params;
  AdamState s = state;
  s.step_count = state.step_count + 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(s.step_count));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(s.step_count));

  for (int k = 0; k < params.num_layers(); ++k) {
    if (grads.weights[k].rows() != params.weights[k].rows() ||
        grads.weights[k].cols() != params.weights[k].cols() ||
        grads.biases[k].size() != params.biases[k].size())
      throw ShapeError("adam_step: gradient shape mismatch at layer " +
                       std::to_string(k));
    if (!grads.weights[k].allFinite() || !grads.biases[k].allFinite())
      throw NumericsError("adam_step: non-finite gradient at layer " +
                          std::to_string(k));

    s.m_weights[k] = kBeta1 * state.m_weights[k] + (1.0 - kBeta1) * grads.weights[k];
    s.v_weights[k] = kBeta2 * state.v_weights[k] +
                     (1.0 - kBeta2) * grads.weights[k].array().square().matrix();
    s.m_biases[k] = kBeta1 * state.m_biases[k] + (1.0 - kBeta1) * grads.biases[k];
    s.v_biases[k] = kBeta2 * state.v_biases[k] +
                    (1.0 - kBeta2) * grads.biases[k].array().square().matrix();

    p.weights[k] -= (lr * (s.m_weights[k] / bc1).array() /
                     ((s.v_weights[k] / bc2).array().sqrt() + kEps))
                        .matrix();
    p.biases[k] -= (lr * (s.m_biases[k] / bc1).array() /
                    ((s.v_biases[k] / bc2).array().sqrt() + kEps))
                       .matrix();
  }
  return {std::move(p), std::move(s)};
}

}  // namespace sqt
