#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sqt/env.hpp"
#include "sqt/rng.hpp"

namespace sqt {

struct QTable {
  Eigen::MatrixXd values;                         // n_states x n_actions
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> visits;

  static QTable zeros(int n_states, int n_actions);
};

struct TabularPolicy {
  Eigen::MatrixXd probs;  // rows sum to 1
};

// Exact Q* via synchronous Bellman backups over expected rewards, until the
// sup-norm residual drops below tol. Terminal states keep value zero.
// Throws NumericsError if 1e6 sweeps do not converge.
QTable value_iteration(const TabularMDP& mdp, double tol);

// Q(s,a) <- (1-lr) Q(s,a) + lr [r + gamma max_a' Q(s',a')]; terminal s'
// bootstraps zero. valid_next limits the max to the first valid_next
// actions (<=0 means all columns).
void q_learning_step(QTable& q, int s, int a, double r, int s_next,
                     bool next_terminal, double lr, double gamma,
                     int valid_next = 0);

// Double estimator update: a fair coin picks the table to update; its
// argmax at s' selects the action whose value is read from the other
// table. Returns the index (0 or 1) of the updated table.
int double_q_step(QTable& qa, QTable& qb, int s, int a, double r, int s_next,
                  bool next_terminal, double lr, double gamma, Rng& rng,
                  int valid_next = 0);

// y = r + gamma * max_a' min_i Q_i(s', a'); terminal s' gives y = r.
double maxmin_target(const std::vector<QTable>& tables, int s_next,
                     bool next_terminal, double r, double gamma,
                     int valid_next = 0);

// y = r + gamma [max_a Q - beta (max_a Q - min_a Q)]; beta in [0, 1].
// beta = 0 is the greedy target, beta = 1 the worst-case target.
double beta_pessimistic_target(const QTable& q, int s_next,
                               bool next_terminal, double r, double gamma,
                               double beta, int valid_next = 0);

// TD residual r + gamma [(1-kappa) max_a Q(s',a) + kappa min_a Q(s',a)]
//           - Q(s,a); kappa in [0, 1]. Caller applies Q += lr * delta.
double q_kappa_delta(const QTable& q, int s, int a, double r, int s_next,
                     bool next_terminal, double gamma, double kappa,
                     int valid_next = 0);

// Monotone worst-case update Q(s,a) <- max[Q(s,a), r + gamma min_a' Q(s',a')].
void minimax_q_step(QTable& q, int s, int a, double r, int s_next,
                    bool next_terminal, double gamma, int valid_next = 0);

// Convex policy mix (1-alpha) pi_old + alpha pi_new.
TabularPolicy cpi_mix(const TabularPolicy& pi_old, const TabularPolicy& pi_new,
                      double alpha);

enum class BiasAlgo { kQ, kDoubleQ, kMaxMin, kBetaPessimistic, kQKappa, kMiniMax };

BiasAlgo parse_bias_algo(const std::string& name);
std::string bias_algo_name(BiasAlgo algo);

struct BiasConfig {
  double lr = 0.1;
  // Epsilon-greedy behavior, ties broken at random. The default of 1.0
  // (uniform exploration) keeps the measured bias a property of the
  // estimator alone, not of the behavior policy's feedback loop.
  double epsilon = 1.0;
  int maxmin_tables = 2;
  double beta = 0.5;
  double kappa = 0.5;
};

struct BiasSeedResult {
  std::uint64_t seed = 0;
  // Estimate bias at the start state's first action (the "go" arm of the
  // maximization-bias MDP): Qhat(start, 0) - Q*(start, 0).
  double deviation = 0.0;
  bool suboptimal = false;  // greedy start action is suboptimal under Q*
  Eigen::VectorXd start_q;  // final composite Qhat(start, .)
};

struct BiasReport {
  std::string algo;
  std::vector<BiasSeedResult> per_seed;
  Eigen::VectorXd q_star_start;
  double mean_deviation = 0.0;
  double std_error = 0.0;  // of the mean deviation
  double suboptimal_fraction = 0.0;
};

// Runs `seeds` independent tabular training runs of `episodes` episodes
// each against the value-iteration oracle. Behavior policy: epsilon-greedy
// on the algorithm's own composite estimate. Seed k uses Rng(k).
BiasReport bias_experiment(const TabularMDP& mdp, BiasAlgo algo, int episodes,
                           int seeds, const BiasConfig& cfg = {});

}  // namespace sqt
