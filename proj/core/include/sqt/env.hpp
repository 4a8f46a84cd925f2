#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sqt/rng.hpp"

namespace sqt {

struct StepResult {
  Eigen::VectorXd state;
  double reward = 0.0;
  bool done = false;
  // True when the episode ended only because the horizon ran out. Callers
  // that bootstrap values should not treat a timeout as a real terminal.
  bool timeout = false;
};

// Episodic continuous-control task with a box action space. Dynamics are
// exact and fully documented on each concrete class so independent ports
// can reproduce trajectories bit for bit.
class ContinuousEnv {
 public:
  virtual ~ContinuousEnv() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual Eigen::VectorXd action_low() const = 0;
  virtual Eigen::VectorXd action_high() const = 0;
  virtual int horizon() const = 0;
  virtual std::string id() const = 0;

  // Draws the initial state and zeroes the step counter.
  virtual Eigen::VectorXd reset(Rng& rng) = 0;

  // Advances one step. Actions are clamped to the box; non-finite actions
  // throw NumericsError.
  virtual StepResult step(const Eigen::VectorXd& action) = 0;

  virtual int steps_taken() const = 0;
};

// 2-D double integrator steered to the origin.
//
//   state  = (px, py, vx, vy), action = (ax, ay) in [-1, 1]^2
//   pos'   = pos + 0.05 * vel          (old velocity)
//   vel'   = vel + 0.05 * a
//   reward = -|pos'|_2 - 0.01 * |a|_2^2
//   done   = |pos'|_2 < 0.05 (goal) or 200 steps (timeout)
//
// Reset: px, py ~ U[-1, 1) redrawn until |pos|_2 >= 0.1 (draw order px
// then py), velocity zero.
class PointMassEnv : public ContinuousEnv {
 public:
  int state_dim() const override { return 4; }
  int action_dim() const override { return 2; }
  Eigen::VectorXd action_low() const override;
  Eigen::VectorXd action_high() const override;
  int horizon() const override { return 200; }
  std::string id() const override { return "point-mass"; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;
  int steps_taken() const override { return steps_; }

  // Test hook: place the mass exactly.
  void set_state(const Eigen::Vector2d& pos, const Eigen::Vector2d& vel);

 private:
  Eigen::VectorXd observation() const;
  Eigen::Vector2d pos_{0.0, 0.0};
  Eigen::Vector2d vel_{0.0, 0.0};
  int steps_ = 0;
};

// Torque-limited pendulum swing-up. Internal state (theta, theta_dot),
// observation (cos theta, sin theta, theta_dot).
//
//   theta'' = (3g / 2l) sin(theta) + (3 / m l^2) tau,  g=10, m=l=1
//   theta_dot' = clamp(theta_dot + theta'' * dt, -8, 8),  dt = 0.05
//   theta'     = theta + theta_dot' * dt                (semi-implicit)
//   reward     = -(wrap(theta)^2 + 0.1 theta_dot^2 + 0.001 tau^2)
//
// with wrap(x) in [-pi, pi) and the reward evaluated at the state *before*
// integration. Torque in [-2, 2]. Horizon 200, no early termination.
// Reset: theta ~ U[-pi, pi), theta_dot ~ U[-1, 1) (theta drawn first).
class PendulumEnv : public ContinuousEnv {
 public:
  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  Eigen::VectorXd action_low() const override;
  Eigen::VectorXd action_high() const override;
  int horizon() const override { return 200; }
  std::string id() const override { return "pendulum"; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;
  int steps_taken() const override { return steps_; }

  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

 private:
  Eigen::VectorXd observation() const;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  int steps_ = 0;
};

// Known ids: "point-mass", "pendulum". Throws ConfigError otherwise.
std::unique_ptr<ContinuousEnv> make_env(std::string_view id);

// Finite MDP with Gaussian rewards. transition(s, a, s') is stored flat;
// rows P(.|s, a) of non-terminal states sum to one. States may expose
// fewer than n_actions actions via action_count.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;   // [s * nA * nS + a * nS + s']
  std::vector<double> reward_mean;  // [s * nA + a]
  std::vector<double> reward_std;   // [s * nA + a]
  std::vector<int> action_count;    // valid actions per state
  std::vector<bool> terminal;
  double gamma = 0.99;
  int start_state = 0;

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r_mean(int s, int a) const { return reward_mean[static_cast<std::size_t>(s) * n_actions + a]; }
  double r_std(int s, int a) const { return reward_std[static_cast<std::size_t>(s) * n_actions + a]; }
};

// Validates row sums (1 within 1e-12 for non-terminal states), gamma in
// [0, 1], non-negative reward_std. Throws ConfigError on violation.
void validate_mdp(const TabularMDP& mdp);

// Two-decision MDP that makes maximization bias measurable. State A
// (start): action 0 moves to state B with reward 0, every other action
// stops at the terminal state with reward 0. State B: n_arms actions, each
// terminal with reward ~ Normal(mu, sigma). With mu < 0 the optimal start
// decision is to stop: Q*(A, go) = gamma * mu < 0, Q*(A, stop) = 0.
TabularMDP make_maximization_bias_mdp(int n_arms, double mu, double sigma,
                                      double gamma = 1.0);

// Samples s' ~ P(.|s, a) and r ~ Normal(mean, std). Transition drawn
// before the reward. Terminal s throws ConfigError; bad indices throw
// std::out_of_range.
std::pair<int, double> mdp_sample_step(const TabularMDP& mdp, int s, int a,
                                       Rng& rng);

}  // namespace sqt
