#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sqt/rng.hpp"

namespace sqt {

enum class Activation { kRelu, kTanh };
enum class OutputActivation { kLinear, kTanh };

// Dense feed-forward parameters. weights[k] maps layer k to layer k+1:
// rows = layer_sizes[k+1], cols = layer_sizes[k].
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation hidden_activation = Activation::kRelu;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
// Draw order: layer by layer, each weight matrix row-major. Deterministic
// for a given rng state.
MlpParams mlp_init(Rng& rng, const std::vector<int>& layer_sizes,
                   Activation hidden_activation);

// Post-activation values of every layer for one forward pass; column b of
// each matrix belongs to sample b. activations.back() is the network output.
struct MlpCache {
  OutputActivation output_activation = OutputActivation::kLinear;
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> activations;
};

// Batched forward pass: input columns are samples. Optionally fills a cache
// for a later backward pass.
Eigen::MatrixXd mlp_forward(const MlpParams& params,
                            const Eigen::MatrixXd& input,
                            OutputActivation output_activation,
                            MlpCache* cache = nullptr);

// Single-sample convenience overload.
Eigen::VectorXd mlp_forward(const MlpParams& params,
                            const Eigen::VectorXd& input,
                            OutputActivation output_activation);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

MlpGradients zero_gradients(const MlpParams& params);

struct MlpBackprop {
  MlpGradients grads;
  // d(sum_b upstream_b . output_b)/d(input), same shape as the input.
  Eigen::MatrixXd input_grad;
};

// Backpropagates d(sum_b upstream_b . output_b)/d(params) through a cached
// forward pass. Gradients are summed over the batch columns.
MlpBackprop mlp_grad(const MlpParams& params, const MlpCache& cache,
                     const Eigen::MatrixXd& upstream);

// Single-sample convenience: forward + backward in one call.
MlpBackprop mlp_grad(const MlpParams& params, const Eigen::VectorXd& input,
                     const Eigen::VectorXd& upstream,
                     OutputActivation output_activation);

// Adam moments mirroring a parameter set.
struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  long step_count = 0;
};

AdamState adam_init(const MlpParams& params);

// One bias-corrected Adam update (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
// Pure: returns the updated parameters and state. Throws NumericsError on
// non-finite gradients.
std::pair<MlpParams, AdamState> adam_step(const MlpParams& params,
                                          const MlpGradients& grads,
                                          const AdamState& state, double lr);

}  // namespace sqt
