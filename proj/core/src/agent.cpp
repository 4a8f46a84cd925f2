#include "sqt/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "sqt/error.hpp"

namespace sqt {

Variant parse_variant(const std::string& name) {
  if (name == "ddpg") return Variant::kDdpg;
  if (name == "td3") return Variant::kTd3;
  if (name == "sqt") return Variant::kSqt;
  throw ConfigError("unknown algo: " + name);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kDdpg: return "ddpg";
    case Variant::kTd3: return "td3";
    case Variant::kSqt: return "sqt";
  }
  throw ConfigError("bad Variant value");
}

QOperator parse_q_operator(const std::string& name) {
  if (name == "min") return QOperator::kMin;
  if (name == "mean") return QOperator::kMean;
  if (name == "wminmax") return QOperator::kWeightedMinMax;
  throw ConfigError("unknown q-operator: " + name);
}

std::string q_operator_name(QOperator op) {
  switch (op) {
    case QOperator::kMin: return "min";
    case QOperator::kMean: return "mean";
    case QOperator::kWeightedMinMax: return "wminmax";
  }
  throw ConfigError("bad QOperator value");
}

TrainingConfig default_config(Variant v) {
  TrainingConfig c;
  switch (v) {
    case Variant::kDdpg:
      c.n_networks = 1;
      c.alpha = 0.0;
      c.q_operator = QOperator::kMean;
      c.target_smoothing = false;
      break;
    case Variant::kTd3:
      c.n_networks = 2;
      c.alpha = 0.0;
      c.q_operator = QOperator::kMin;
      c.target_smoothing = true;
      break;
    case Variant::kSqt:
      c.n_networks = 4;
      c.alpha = 0.1;
      c.q_operator = QOperator::kMin;
      c.target_smoothing = true;
      break;
  }
  return c;
}

Batch make_batch(const std::vector<Transition>& transitions) {
  if (transitions.empty()) throw ConfigError("make_batch: empty batch");
  const int b = static_cast<int>(transitions.size());
  const int s_dim = static_cast<int>(transitions.front().state.size());
  const int a_dim = static_cast<int>(transitions.front().action.size());
  Batch out;
  out.states.resize(s_dim, b);
  out.actions.resize(a_dim, b);
  out.next_states.resize(s_dim, b);
  out.rewards.resize(b);
  out.done.resize(b);
  for (int i = 0; i < b; ++i) {
    const Transition& t = transitions[i];
    if (t.state.size() != s_dim || t.next_state.size() != s_dim ||
        t.action.size() != a_dim)
      throw ShapeError("make_batch: inconsistent transition dims");
    out.states.col(i) = t.state;
    out.actions.col(i) = t.action;
    out.next_states.col(i) = t.next_state;
    out.rewards(i) = t.reward;
    out.done(i) = t.done ? 1.0 : 0.0;
  }
  return out;
}

Eigen::VectorXd ensemble_std(const Eigen::MatrixXd& values) {
  const int n = static_cast<int>(values.rows());
  const int b = static_cast<int>(values.cols());
  if (n < 1 || b < 1) throw ConfigError("ensemble_std: empty value matrix");
  if (n == 1) return Eigen::VectorXd::Zero(b);
  // Shift by the first row so that an ensemble of identical critics yields
  // an exact zero, not rounding noise.
  Eigen::MatrixXd d = values.rowwise() - values.row(0);
  Eigen::RowVectorXd mean = d.colwise().mean();
  Eigen::MatrixXd centered = d.rowwise() - mean;
  return centered.array().square().colwise().mean().sqrt().transpose();
}

double sqt_penalty(const EnsembleCritic& critic, const Eigen::MatrixXd& states,
                   const Eigen::MatrixXd& actions) {
  if (states.cols() < 1) throw ConfigError("sqt_penalty: empty batch");
  if (states.cols() != actions.cols())
    throw ShapeError("sqt_penalty: state/action batch widths differ");
  const int b = static_cast<int>(states.cols());
  Eigen::MatrixXd input(states.rows() + actions.rows(), b);
  input << states, actions;
  Eigen::MatrixXd q(critic.size(), b);
  for (int i = 0; i < critic.size(); ++i)
    q.row(i) = mlp_forward(critic.target[i], input, OutputActivation::kLinear);
  return ensemble_std(q).mean();
}

Eigen::VectorXd q_operator_apply(const Eigen::MatrixXd& values, QOperator op,
                                 double lambda) {
  if (values.rows() < 1 || values.cols() < 1)
    throw ConfigError("q_operator_apply: empty value matrix");
  switch (op) {
    case QOperator::kMin:
      return values.colwise().minCoeff().transpose();
    case QOperator::kMean:
      return values.colwise().mean().transpose();
    case QOperator::kWeightedMinMax: {
      if (lambda < 0.0 || lambda > 1.0)
        throw ConfigError("q_operator_apply: lambda must lie in [0, 1]");
      return (lambda * values.colwise().minCoeff() +
              (1.0 - lambda) * values.colwise().maxCoeff())
          .transpose();
    }
  }
  throw ConfigError("bad QOperator value");
}

namespace {

void validate_config(Variant variant, const TrainingConfig& c) {
  if (c.gamma < 0.0 || c.gamma >= 1.0)
    throw ConfigError("config: gamma must lie in [0, 1)");
  if (c.alpha < 0.0) throw ConfigError("config: alpha must be >= 0");
  if (c.n_networks < 1) throw ConfigError("config: n_networks must be >= 1");
  if (c.minmax_lambda < 0.0 || c.minmax_lambda > 1.0)
    throw ConfigError("config: lambda must lie in [0, 1]");
  if (c.noise_std < 0.0) throw ConfigError("config: noise_std must be >= 0");
  if (c.target_interval < 1)
    throw ConfigError("config: target_interval must be >= 1");
  if (c.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (c.updates_per_step < 1)
    throw ConfigError("config: updates_per_step must be >= 1");
  if (c.actor_lr <= 0.0 || c.critic_lr <= 0.0)
    throw ConfigError("config: learning rates must be positive");
  if (c.warmup_steps < 0) throw ConfigError("config: warmup_steps must be >= 0");
  if (c.buffer_capacity < c.batch_size)
    throw ConfigError("config: buffer_capacity must cover one batch");
  for (int h : c.hidden)
    if (h < 1) throw ConfigError("config: hidden sizes must be positive");

  switch (variant) {
    case Variant::kDdpg:
      if (c.n_networks != 1 || c.alpha != 0.0 ||
          c.q_operator != QOperator::kMean)
        throw ConfigError(
            "ddpg requires n_networks=1, alpha=0, operator=mean");
      break;
    case Variant::kTd3:
      if (c.n_networks != 2 || c.alpha != 0.0 ||
          c.q_operator != QOperator::kMin)
        throw ConfigError("td3 requires n_networks=2, alpha=0, operator=min");
      break;
    case Variant::kSqt:
      // alpha = 0 is allowed explicitly: it reduces the target to the host
      // algorithm's and is the baseline for equivalence checks.
      break;
  }
}

std::vector<int> layer_spec(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

Agent::Agent(Variant variant, int state_dim, int action_dim,
             Eigen::VectorXd action_low, Eigen::VectorXd action_high,
             TrainingConfig config, std::uint64_t seed)
    : variant_(variant),
      state_dim_(state_dim),
      action_dim_(action_dim),
      action_low_(std::move(action_low)),
      action_high_(std::move(action_high)),
      config_(std::move(config)),
      rng_(seed),
      buffer_(config_.buffer_capacity, state_dim, action_dim) {
  if (state_dim_ < 1 || action_dim_ < 1)
    throw ConfigError("Agent: dims must be >= 1");
  if (action_low_.size() != action_dim_ || action_high_.size() != action_dim_)
    throw ShapeError("Agent: action bound dims do not match action_dim");
  if (((action_high_ - action_low_).array() <= 0.0).any())
    throw ConfigError("Agent: action_high must exceed action_low");
  validate_config(variant_, config_);

  action_center_ = 0.5 * (action_high_ + action_low_);
  action_half_ = 0.5 * (action_high_ - action_low_);

  // Init draw order: actor first, then critics in index order. Targets are
  // copies and consume no randomness.
  actor_.live = mlp_init(
      rng_, layer_spec(state_dim_, config_.hidden, action_dim_),
      Activation::kRelu);
  actor_.target = actor_.live;
  actor_.opt = adam_init(actor_.live);
  for (int i = 0; i < config_.n_networks; ++i) {
    critic_.live.push_back(mlp_init(
        rng_, layer_spec(state_dim_ + action_dim_, config_.hidden, 1),
        Activation::kRelu));
    critic_.target.push_back(critic_.live.back());
    critic_.opt.push_back(adam_init(critic_.live.back()));
  }
}

Agent Agent::for_env(Variant variant, const ContinuousEnv& env,
                     TrainingConfig config, std::uint64_t seed) {
  return Agent(variant, env.state_dim(), env.action_dim(), env.action_low(),
               env.action_high(), std::move(config), seed);
}

Eigen::MatrixXd Agent::scale_actions(const Eigen::MatrixXd& raw) const {
  return ((raw.array().colwise() * action_half_.array()).colwise() +
          action_center_.array())
      .matrix();
}

TargetBatch Agent::compute_target(const Batch& batch) {
  const int b = batch.size();
  if (b < 1) throw ConfigError("compute_target: empty batch");

  Eigen::MatrixXd next_actions = scale_actions(
      mlp_forward(actor_.target, batch.next_states, OutputActivation::kTanh));
  if (config_.target_smoothing) {
    // Clipped smoothing noise in scaled action units; draw order is sample
    // -major, dimension-minor.
    for (int i = 0; i < b; ++i) {
      for (int d = 0; d < action_dim_; ++d) {
        const double half = action_half_(d);
        const double noise =
            std::clamp(rng_.normal(0.0, config_.smoothing_std * half),
                       -config_.smoothing_clip * half,
                       config_.smoothing_clip * half);
        next_actions(d, i) =
            std::clamp(next_actions(d, i) + noise, action_low_(d),
                       action_high_(d));
      }
    }
  }

  Eigen::MatrixXd input(state_dim_ + action_dim_, b);
  input << batch.next_states, next_actions;
  Eigen::MatrixXd q_values(critic_.size(), b);
  for (int i = 0; i < critic_.size(); ++i)
    q_values.row(i) =
        mlp_forward(critic_.target[i], input, OutputActivation::kLinear);

  const Eigen::VectorXd reduced =
      q_operator_apply(q_values, config_.q_operator, config_.minmax_lambda);
  const Eigen::VectorXd per_sample_std = ensemble_std(q_values);

  TargetBatch out;
  out.penalty = per_sample_std.mean();
  const Eigen::VectorXd mask = 1.0 - batch.done.array();
  out.y_unpenalized =
      batch.rewards.array() + config_.gamma * mask.array() * reduced.array();

  Eigen::ArrayXd penalty_term = Eigen::ArrayXd::Constant(b, out.penalty);
  if (config_.per_element_penalty) penalty_term = per_sample_std.array();
  if (config_.masked_penalty) {
    out.y = batch.rewards.array() +
            config_.gamma * mask.array() *
                (reduced.array() - config_.alpha * penalty_term);
  } else {
    out.y = out.y_unpenalized.array() - config_.alpha * penalty_term;
  }

  if (!out.y.allFinite())
    throw NumericsError("compute_target: non-finite target");
  return out;
}

double Agent::critic_update(const Batch& batch, const Eigen::VectorXd& y) {
  const int b = batch.size();
  if (y.size() != b) throw ShapeError("critic_update: y size != batch size");
  if (!y.allFinite()) throw NumericsError("critic_update: non-finite target");

  Eigen::MatrixXd input(state_dim_ + action_dim_, b);
  input << batch.states, batch.actions;

  double loss_sum = 0.0;
  for (int i = 0; i < critic_.size(); ++i) {
    MlpCache cache;
    const Eigen::MatrixXd out =
        mlp_forward(critic_.live[i], input, OutputActivation::kLinear, &cache);
    const Eigen::VectorXd diff = out.row(0).transpose() - y;
    const double loss = diff.squaredNorm() / b;
    if (!std::isfinite(loss))
      throw NumericsError("critic_update: non-finite loss");
    loss_sum += loss;
    const Eigen::MatrixXd upstream = (2.0 / b) * diff.transpose();
    MlpBackprop bp = mlp_grad(critic_.live[i], cache, upstream);
    auto [params, opt] =
        adam_step(critic_.live[i], bp.grads, critic_.opt[i], config_.critic_lr);
    critic_.live[i] = std::move(params);
    critic_.opt[i] = std::move(opt);
  }
  ++updates_;
  return loss_sum / critic_.size();
}

void Agent::actor_update(const Batch& batch) {
  const int b = batch.size();
  const int n = critic_.size();

  MlpCache actor_cache;
  const Eigen::MatrixXd raw = mlp_forward(
      actor_.live, batch.states, OutputActivation::kTanh, &actor_cache);
  const Eigen::MatrixXd actions = scale_actions(raw);

  Eigen::MatrixXd input(state_dim_ + action_dim_, b);
  input << batch.states, actions;

  // d/d(action) of the batch mean of the ensemble-mean critic value.
  Eigen::MatrixXd dq_da = Eigen::MatrixXd::Zero(action_dim_, b);
  const Eigen::MatrixXd upstream =
      Eigen::MatrixXd::Constant(1, b, 1.0 / (static_cast<double>(n) * b));
  for (int i = 0; i < n; ++i) {
    MlpCache cache;
    mlp_forward(critic_.live[i], input, OutputActivation::kLinear, &cache);
    MlpBackprop bp = mlp_grad(critic_.live[i], cache, upstream);
    dq_da += bp.input_grad.bottomRows(action_dim_);
  }

  // Through the affine output scaling, then ascend.
  const Eigen::MatrixXd actor_upstream =
      (dq_da.array().colwise() * action_half_.array()).matrix();
  MlpBackprop bp = mlp_grad(actor_.live, actor_cache, actor_upstream);
  for (auto& w : bp.grads.weights) w = -w;
  for (auto& v : bp.grads.biases) v = -v;
  auto [params, opt] =
      adam_step(actor_.live, bp.grads, actor_.opt, config_.actor_lr);
  actor_.live = std::move(params);
  actor_.opt = std::move(opt);
}

void Agent::target_update() {
  if (updates_ == 0 || updates_ % config_.target_interval != 0) return;
  for (int i = 0; i < critic_.size(); ++i)
    critic_.target[i] = critic_.live[i];
  actor_.target = actor_.live;
}

Eigen::VectorXd Agent::select_action(const Eigen::VectorXd& state,
                                     bool explore, Rng& rng) {
  if (explore && env_steps_ < config_.warmup_steps) {
    Eigen::VectorXd a(action_dim_);
    for (int d = 0; d < action_dim_; ++d)
      a(d) = rng.uniform(action_low_(d), action_high_(d));
    return a;
  }
  Eigen::VectorXd raw =
      mlp_forward(actor_.live, state, OutputActivation::kTanh);
  Eigen::VectorXd a =
      action_center_.array() + action_half_.array() * raw.array();
  if (explore && config_.noise_std > 0.0)
    for (int d = 0; d < action_dim_; ++d)
      a(d) += rng.normal(0.0, config_.noise_std * action_half_(d));
  return a.cwiseMax(action_low_).cwiseMin(action_high_);
}

void Agent::run_update_iteration() {
  const Batch batch = make_batch(buffer_.sample(rng_, config_.batch_size));
  TargetBatch target = compute_target(batch);
  const double loss = critic_update(batch, target.y);
  actor_update(batch);
  target_update();

  episode_penalty_sum_ += target.penalty;
  episode_loss_sum_ += loss;
  ++episode_updates_;
  chunk_penalty_sum_ += target.penalty;
  chunk_loss_sum_ += loss;
  ++chunk_updates_;
  if (config_.record_update_trace) {
    trace_.critic_loss.push_back(loss);
    trace_.target_sum.push_back(target.y.sum());
    trace_.penalty.push_back(target.penalty);
    trace_.target_gap_max.push_back(
        (target.y - target.y_unpenalized).maxCoeff());
    trace_.param_probe.push_back(critic_.live[0].weights[0](0, 0) +
                                 actor_.live.weights[0](0, 0));
  }
}

std::vector<EpisodeRecord> Agent::train(ContinuousEnv& env, long steps) {
  if (env.state_dim() != state_dim_ || env.action_dim() != action_dim_)
    throw ShapeError("train: env dims do not match agent dims");
  chunk_penalty_sum_ = 0.0;
  chunk_loss_sum_ = 0.0;
  chunk_updates_ = 0;

  std::vector<EpisodeRecord> records;
  for (long t = 0; t < steps; ++t) {
    if (!episode_active_) {
      current_state_ = env.reset(rng_);
      episode_return_ = 0.0;
      episode_length_ = 0;
      episode_penalty_sum_ = 0.0;
      episode_loss_sum_ = 0.0;
      episode_updates_ = 0;
      episode_active_ = true;
    }
    const Eigen::VectorXd action = select_action(current_state_, true, rng_);
    StepResult res;
    try {
      res = env.step(action);
    } catch (const NumericsError& e) {
      throw NumericsError(std::string(e.what()) + " at env step " +
                          std::to_string(env_steps_));
    }
    Transition tr;
    tr.state = current_state_;
    tr.action = action;
    tr.reward = res.reward;
    tr.next_state = res.state;
    // Horizon cuts are not real terminals; bootstrapping continues through
    // them.
    tr.done = res.done && !res.timeout;
    buffer_.push(tr);

    ++env_steps_;
    episode_return_ += res.reward;
    ++episode_length_;

    if (env_steps_ > config_.warmup_steps &&
        buffer_.size() >= config_.batch_size) {
      for (int g = 0; g < config_.updates_per_step; ++g) {
        try {
          run_update_iteration();
        } catch (const NumericsError& e) {
          throw NumericsError(std::string(e.what()) + " at env step " +
                              std::to_string(env_steps_));
        }
      }
    }

    if (res.done) {
      EpisodeRecord rec;
      rec.index = episodes_done_++;
      rec.episode_return = episode_return_;
      rec.length = episode_length_;
      rec.mean_penalty =
          episode_updates_ > 0 ? episode_penalty_sum_ / episode_updates_ : 0.0;
      rec.mean_critic_loss =
          episode_updates_ > 0 ? episode_loss_sum_ / episode_updates_ : 0.0;
      records.push_back(rec);
      episode_active_ = false;
    } else {
      current_state_ = res.state;
    }
  }
  return records;
}

double Agent::evaluate(ContinuousEnv& env, int episodes, Rng& rng) const {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd state = env.reset(rng);
    while (true) {
      const Eigen::VectorXd raw =
          mlp_forward(actor_.live, state, OutputActivation::kTanh);
      Eigen::VectorXd action =
          (action_center_.array() + action_half_.array() * raw.array())
              .matrix()
              .cwiseMax(action_low_)
              .cwiseMin(action_high_);
      const StepResult res = env.step(action);
      total += res.reward;
      if (res.done) break;
      state = res.state;
    }
  }
  return total / episodes;
}

double Agent::chunk_mean_penalty() const {
  return chunk_updates_ > 0 ? chunk_penalty_sum_ / chunk_updates_ : 0.0;
}

double Agent::chunk_mean_critic_loss() const {
  return chunk_updates_ > 0 ? chunk_loss_sum_ / chunk_updates_ : 0.0;
}

}  // namespace sqt
