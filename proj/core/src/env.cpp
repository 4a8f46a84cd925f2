#include "sqt/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sqt/error.hpp"

namespace sqt {

namespace {

constexpr double kDt = 0.05;

void check_action(const Eigen::VectorXd& action, int dim) {
  if (action.size() != dim)
    throw ShapeError("env step: action dim " + std::to_string(action.size()) +
                     " != " + std::to_string(dim));
  if (!action.allFinite())
    throw NumericsError("env step: non-finite action");
}

double wrap_angle(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  return x - two_pi * std::floor((x + std::numbers::pi) / two_pi);
}

}  // namespace

Eigen::VectorXd PointMassEnv::action_low() const {
  return Eigen::VectorXd::Constant(2, -1.0);
}

Eigen::VectorXd PointMassEnv::action_high() const {
  return Eigen::VectorXd::Constant(2, 1.0);
}

Eigen::VectorXd PointMassEnv::observation() const {
  Eigen::VectorXd s(4);
  s << pos_(0), pos_(1), vel_(0), vel_(1);
  return s;
}

Eigen::VectorXd PointMassEnv::reset(Rng& rng) {
  do {
    pos_(0) = rng.uniform(-1.0, 1.0);
    pos_(1) = rng.uniform(-1.0, 1.0);
  } while (pos_.norm() < 0.1);
  vel_.setZero();
  steps_ = 0;
  return observation();
}

void PointMassEnv::set_state(const Eigen::Vector2d& pos,
                             const Eigen::Vector2d& vel) {
  pos_ = pos;
  vel_ = vel;
  steps_ = 0;
}

StepResult PointMassEnv::step(const Eigen::VectorXd& action) {
  check_action(action, 2);
  const Eigen::Vector2d a = action.cwiseMax(-1.0).cwiseMin(1.0);
  pos_ += kDt * vel_;
  vel_ += kDt * a;
  ++steps_;

  StepResult res;
  res.state = observation();
  res.reward = -pos_.norm() - 0.01 * a.squaredNorm();
  const bool goal = pos_.norm() < 0.05;
  const bool horizon_hit = steps_ >= horizon();
  res.done = goal || horizon_hit;
  res.timeout = horizon_hit && !goal;
  return res;
}

Eigen::VectorXd PendulumEnv::action_low() const {
  return Eigen::VectorXd::Constant(1, -2.0);
}

Eigen::VectorXd PendulumEnv::action_high() const {
  return Eigen::VectorXd::Constant(1, 2.0);
}

Eigen::VectorXd PendulumEnv::observation() const {
  Eigen::VectorXd s(3);
  s << std::cos(theta_), std::sin(theta_), theta_dot_;
  return s;
}

Eigen::VectorXd PendulumEnv::reset(Rng& rng) {
  theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return observation();
}

void PendulumEnv::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  steps_ = 0;
}

StepResult PendulumEnv::step(const Eigen::VectorXd& action) {
  check_action(action, 1);
  const double tau = std::clamp(action(0), -2.0, 2.0);
  const double wrapped = wrap_angle(theta_);
  const double cost =
      wrapped * wrapped + 0.1 * theta_dot_ * theta_dot_ + 0.001 * tau * tau;

  const double accel = 15.0 * std::sin(theta_) + 3.0 * tau;  // 3g/2l = 15
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -8.0, 8.0);
  theta_ += theta_dot_ * kDt;
  ++steps_;

  StepResult res;
  res.state = observation();
  res.reward = -cost;
  res.done = steps_ >= horizon();
  res.timeout = res.done;
  return res;
}

std::unique_ptr<ContinuousEnv> make_env(std::string_view id) {
  if (id == "point-mass") return std::make_unique<PointMassEnv>();
  if (id == "pendulum") return std::make_unique<PendulumEnv>();
  if (id == "max-bias")
    throw ConfigError(
        "max-bias is a tabular MDP; use the `bias` command, not `train`");
  throw ConfigError("unknown env id: " + std::string(id));
}

void validate_mdp(const TabularMDP& mdp) {
  if (mdp.n_states < 1 || mdp.n_actions < 1)
    throw ConfigError("TabularMDP: need at least one state and action");
  if (mdp.gamma < 0.0 || mdp.gamma > 1.0)
    throw ConfigError("TabularMDP: gamma must lie in [0, 1]");
  if (mdp.start_state < 0 || mdp.start_state >= mdp.n_states)
    throw ConfigError("TabularMDP: start_state out of range");
  const std::size_t ns = mdp.n_states, na = mdp.n_actions;
  if (mdp.transition.size() != ns * na * ns ||
      mdp.reward_mean.size() != ns * na || mdp.reward_std.size() != ns * na ||
      mdp.action_count.size() != ns || mdp.terminal.size() != ns)
    throw ConfigError("TabularMDP: field sizes are inconsistent");
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.action_count[s] < 1 || mdp.action_count[s] > mdp.n_actions)
      throw ConfigError("TabularMDP: bad action_count");
    if (mdp.terminal[s]) continue;
    for (int a = 0; a < mdp.action_count[s]; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        const double p = mdp.p(s, a, s2);
        if (p < 0.0) throw ConfigError("TabularMDP: negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("TabularMDP: row P(.|" + std::to_string(s) + "," +
                          std::to_string(a) + ") sums to " +
                          std::to_string(sum));
      if (mdp.r_std(s, a) < 0.0)
        throw ConfigError("TabularMDP: negative reward std");
    }
  }
}

TabularMDP make_maximization_bias_mdp(int n_arms, double mu, double sigma,
                                      double gamma) {
  if (n_arms < 2) throw ConfigError("max-bias MDP: need n_arms >= 2");
  if (sigma < 0.0) throw ConfigError("max-bias MDP: sigma must be >= 0");
  TabularMDP mdp;
  mdp.n_states = 3;  // 0 = A (start), 1 = B, 2 = terminal
  mdp.n_actions = n_arms;
  mdp.gamma = gamma;
  mdp.start_state = 0;
  const std::size_t ns = 3, na = n_arms;
  mdp.transition.assign(ns * na * ns, 0.0);
  mdp.reward_mean.assign(ns * na, 0.0);
  mdp.reward_std.assign(ns * na, 0.0);
  mdp.action_count = {n_arms, n_arms, 1};
  mdp.terminal = {false, false, true};

  // State A: action 0 ("go") -> B; the rest stop at the terminal state.
  mdp.p(0, 0, 1) = 1.0;
  for (int a = 1; a < n_arms; ++a) mdp.p(0, a, 2) = 1.0;
  // State B: every arm terminates with reward ~ Normal(mu, sigma).
  for (int a = 0; a < n_arms; ++a) {
    mdp.p(1, a, 2) = 1.0;
    mdp.reward_mean[1 * na + a] = mu;
    mdp.reward_std[1 * na + a] = sigma;
  }
  validate_mdp(mdp);
  return mdp;
}

std::pair<int, double> mdp_sample_step(const TabularMDP& mdp, int s, int a,
                                       Rng& rng) {
  if (s < 0 || s >= mdp.n_states)
    throw std::out_of_range("mdp_sample_step: state out of range");
  if (mdp.terminal[s])
    throw ConfigError("mdp_sample_step: state " + std::to_string(s) +
                      " is terminal");
  if (a < 0 || a >= mdp.action_count[s])
    throw std::out_of_range("mdp_sample_step: action out of range");

  const double u = rng.uniform01();
  double acc = 0.0;
  int next = mdp.n_states - 1;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    acc += mdp.p(s, a, s2);
    if (u < acc) {
      next = s2;
      break;
    }
  }
  const double r = rng.normal(mdp.r_mean(s, a), mdp.r_std(s, a));
  return {next, r};
}

}  // namespace sqt
