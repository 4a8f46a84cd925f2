#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sqt/env.hpp"
#include "sqt/mlp.hpp"
#include "sqt/replay.hpp"
#include "sqt/rng.hpp"

namespace sqt {

enum class Variant { kDdpg, kTd3, kSqt };
enum class QOperator { kMin, kMean, kWeightedMinMax };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
QOperator parse_q_operator(const std::string& name);
std::string q_operator_name(QOperator op);

struct TrainingConfig {
  double gamma = 0.99;
  double alpha = 0.1;       // ensemble-std penalty weight
  int n_networks = 4;
  QOperator q_operator = QOperator::kMin;
  double minmax_lambda = 1.0;  // weighted min/max mixing, 1 = pure min
  double noise_std = 0.1;      // exploration noise, fraction of half-range
  int target_interval = 250;   // gradient updates between hard target copies
  int batch_size = 100;
  int updates_per_step = 1;    // gradient iterations per env step
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int warmup_steps = 1000;     // uniform-random action steps before updates
  long total_steps = 30000;
  std::vector<int> hidden = {256, 256};
  int buffer_capacity = 200000;

  // Target-policy smoothing (clipped normal, fractions of half-range).
  bool target_smoothing = true;
  double smoothing_std = 0.2;
  double smoothing_clip = 0.5;

  // Ablations; both default off. per_element_penalty subtracts each
  // sample's own ensemble std instead of the batch-mean scalar;
  // masked_penalty moves the penalty inside the gamma * (1 - done) factor.
  bool per_element_penalty = false;
  bool masked_penalty = false;

  bool record_update_trace = false;
};

// Variant defaults: ddpg = single critic, no penalty, no smoothing;
// td3 = twin critics with min operator; sqt = td3 plus the std penalty
// over a wider ensemble.
TrainingConfig default_config(Variant v);

struct EnsembleCritic {
  std::vector<MlpParams> live;
  std::vector<MlpParams> target;
  std::vector<AdamState> opt;
  int size() const { return static_cast<int>(live.size()); }
};

struct ActorPolicy {
  MlpParams live;
  MlpParams target;
  AdamState opt;
};

// Column-per-sample minibatch.
struct Batch {
  Eigen::MatrixXd states, actions, next_states;
  Eigen::VectorXd rewards, done;
  int size() const { return static_cast<int>(rewards.size()); }
};

Batch make_batch(const std::vector<Transition>& transitions);

// Mean over the batch of the per-sample population std of the N target
// critic values at (s, a). Zero for N = 1 and exactly zero when all
// critics coincide.
double sqt_penalty(const EnsembleCritic& critic, const Eigen::MatrixXd& states,
                   const Eigen::MatrixXd& actions);

// Per-sample population std across ensemble rows of an N x batch matrix.
Eigen::VectorXd ensemble_std(const Eigen::MatrixXd& values);

// Reduces an N x batch value matrix to one scalar per sample: min, mean,
// or lambda * min + (1 - lambda) * max.
Eigen::VectorXd q_operator_apply(const Eigen::MatrixXd& values, QOperator op,
                                 double lambda = 1.0);

struct TargetBatch {
  Eigen::VectorXd y;
  Eigen::VectorXd y_unpenalized;  // same target with alpha forced to 0
  double penalty = 0.0;           // batch penalty scalar (pre-alpha)
};

struct EpisodeRecord {
  int index = 0;
  double episode_return = 0.0;
  int length = 0;
  double mean_penalty = 0.0;
  double mean_critic_loss = 0.0;
};

// Per-gradient-update diagnostics, recorded when
// TrainingConfig::record_update_trace is set.
struct UpdateTrace {
  std::vector<double> critic_loss;
  std::vector<double> target_sum;
  std::vector<double> penalty;
  std::vector<double> target_gap_max;  // max over batch of y - y_unpenalized
  std::vector<double> param_probe;     // one weight each from critic 0 / actor
};

class Agent {
 public:
  Agent(Variant variant, int state_dim, int action_dim,
        Eigen::VectorXd action_low, Eigen::VectorXd action_high,
        TrainingConfig config, std::uint64_t seed);

  static Agent for_env(Variant variant, const ContinuousEnv& env,
                       TrainingConfig config, std::uint64_t seed);

  // Target for a batch: bootstrap through the target actor and target
  // critics (with smoothing noise when enabled), reduced by the configured
  // operator, minus alpha times the batch penalty. Consumes this agent's
  // rng when smoothing is on.
  TargetBatch compute_target(const Batch& batch);

  // One Adam step per critic on the squared TD error against fixed y.
  // Returns the mean loss across the ensemble; counts as one update
  // toward the target interval.
  double critic_update(const Batch& batch, const Eigen::VectorXd& y);

  // One Adam ascent step on the batch mean of the ensemble-mean critic
  // value at (s, actor(s)); gradients flow through the actor only.
  void actor_update(const Batch& batch);

  // Hard-copies live parameters onto the targets whenever the update
  // counter is at a multiple of target_interval. Call after each update.
  void target_update();

  // Greedy actor action, plus exploration noise when explore is true.
  // During the warmup phase exploring actions are uniform in the box.
  // Always clipped to the action bounds.
  Eigen::VectorXd select_action(const Eigen::VectorXd& state, bool explore,
                                Rng& rng);

  // Runs `steps` environment steps of the standard interaction loop
  // (store transition, then updates_per_step gradient iterations once the
  // warmup is over). Episodes spanning calls are carried over; the record
  // for an unfinished trailing episode is emitted by a later call.
  std::vector<EpisodeRecord> train(ContinuousEnv& env, long steps);

  // Mean return of `episodes` greedy episodes. Does not touch training
  // state; uses the supplied rng for resets only.
  double evaluate(ContinuousEnv& env, int episodes, Rng& rng) const;

  // Exact textual dump of configuration and every parameter array; see
  // checkpoint.cpp for the format. Restores via Agent::deserialize.
  std::string serialize() const;
  static Agent deserialize(const std::string& text);

  Variant variant() const { return variant_; }
  const TrainingConfig& config() const { return config_; }
  const EnsembleCritic& critic() const { return critic_; }
  EnsembleCritic& critic() { return critic_; }
  const ActorPolicy& actor() const { return actor_; }
  ActorPolicy& actor() { return actor_; }
  const ReplayBuffer& replay() const { return buffer_; }
  Rng& rng() { return rng_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const Eigen::VectorXd& action_low() const { return action_low_; }
  const Eigen::VectorXd& action_high() const { return action_high_; }
  long env_steps() const { return env_steps_; }
  long updates_done() const { return updates_; }
  const UpdateTrace& update_trace() const { return trace_; }

  // Mean diagnostics over the updates performed by the last train() call.
  double chunk_mean_penalty() const;
  double chunk_mean_critic_loss() const;

 private:
  friend class AgentBuilder;

  Eigen::VectorXd scale_action(const Eigen::MatrixXd& raw_col) const;
  Eigen::MatrixXd scale_actions(const Eigen::MatrixXd& raw) const;
  void run_update_iteration();

  Variant variant_;
  int state_dim_;
  int action_dim_;
  Eigen::VectorXd action_low_, action_high_;
  Eigen::VectorXd action_center_, action_half_;
  TrainingConfig config_;
  Rng rng_;
  EnsembleCritic critic_;
  ActorPolicy actor_;
  ReplayBuffer buffer_;

  long env_steps_ = 0;
  long updates_ = 0;
  int episodes_done_ = 0;

  bool episode_active_ = false;
  Eigen::VectorXd current_state_;
  double episode_return_ = 0.0;
  int episode_length_ = 0;
  double episode_penalty_sum_ = 0.0;
  double episode_loss_sum_ = 0.0;
  long episode_updates_ = 0;

  double chunk_penalty_sum_ = 0.0;
  double chunk_loss_sum_ = 0.0;
  long chunk_updates_ = 0;

  UpdateTrace trace_;
};

}  // namespace sqt
