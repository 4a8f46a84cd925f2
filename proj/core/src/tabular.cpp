#include "sqt/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sqt/error.hpp"

namespace sqt {

namespace {

void check_index(const QTable& q, int s, int a) {
  if (s < 0 || s >= q.values.rows())
    throw std::out_of_range("QTable: state index out of range");
  if (a < 0 || a >= q.values.cols())
    throw std::out_of_range("QTable: action index out of range");
}

int columns_or_all(const QTable& q, int valid) {
  const int n = static_cast<int>(q.values.cols());
  if (valid <= 0) return n;
  if (valid > n) throw std::out_of_range("QTable: valid_next exceeds actions");
  return valid;
}

double row_max(const QTable& q, int s, int valid) {
  return q.values.row(s).head(columns_or_all(q, valid)).maxCoeff();
}

double row_min(const QTable& q, int s, int valid) {
  return q.values.row(s).head(columns_or_all(q, valid)).minCoeff();
}

}  // namespace

QTable QTable::zeros(int n_states, int n_actions) {
  QTable q;
  q.values = Eigen::MatrixXd::Zero(n_states, n_actions);
  q.visits.setZero(n_states, n_actions);
  return q;
}

QTable value_iteration(const TabularMDP& mdp, double tol) {
  if (tol <= 0.0) throw ConfigError("value_iteration: tol must be positive");
  validate_mdp(mdp);

  QTable q = QTable::zeros(mdp.n_states, mdp.n_actions);
  constexpr long kMaxSweeps = 1000000;
  for (long sweep = 0; sweep < kMaxSweeps; ++sweep) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
      if (mdp.terminal[s]) continue;
      for (int a = 0; a < mdp.action_count[s]; ++a) {
        double v = mdp.r_mean(s, a);
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const double p = mdp.p(s, a, s2);
          if (p == 0.0 || mdp.terminal[s2]) continue;
          v += mdp.gamma * p *
               q.values.row(s2).head(mdp.action_count[s2]).maxCoeff();
        }
        next(s, a) = v;
      }
    }
    const double residual = (next - q.values).cwiseAbs().maxCoeff();
    q.values = next;
    if (residual < tol) return q;
  }
  throw NumericsError("value_iteration: no convergence after 1e6 sweeps");
}

void q_learning_step(QTable& q, int s, int a, double r, int s_next,
                     bool next_terminal, double lr, double gamma,
                     int valid_next) {
  check_index(q, s, a);
  if (lr < 0.0 || lr > 1.0)
    throw ConfigError("q_learning_step: lr must lie in [0, 1]");
  double bootstrap = 0.0;
  if (!next_terminal) {
    check_index(q, s_next, 0);
    bootstrap = row_max(q, s_next, valid_next);
  }
  const double target = r + gamma * bootstrap;
  q.values(s, a) = (1.0 - lr) * q.values(s, a) + lr * target;
  q.visits(s, a) += 1;
}

int double_q_step(QTable& qa, QTable& qb, int s, int a, double r, int s_next,
                  bool next_terminal, double lr, double gamma, Rng& rng,
                  int valid_next) {
  const bool update_a = rng.uniform01() < 0.5;
  QTable& own = update_a ? qa : qb;
  QTable& other = update_a ? qb : qa;
  check_index(own, s, a);
  double bootstrap = 0.0;
  if (!next_terminal) {
    check_index(own, s_next, 0);
    const int n = columns_or_all(own, valid_next);
    int best = 0;
    own.values.row(s_next).head(n).maxCoeff(&best);
    bootstrap = other.values(s_next, best);
  }
  const double target = r + gamma * bootstrap;
  own.values(s, a) = (1.0 - lr) * own.values(s, a) + lr * target;
  own.visits(s, a) += 1;
  return update_a ? 0 : 1;
}

double maxmin_target(const std::vector<QTable>& tables, int s_next,
                     bool next_terminal, double r, double gamma,
                     int valid_next) {
  if (tables.empty()) throw ConfigError("maxmin_target: no tables");
  if (next_terminal) return r;
  const int n = columns_or_all(tables.front(), valid_next);
  Eigen::VectorXd composite = tables.front().values.row(s_next).head(n);
  for (std::size_t i = 1; i < tables.size(); ++i)
    composite = composite.cwiseMin(
        tables[i].values.row(s_next).head(n).transpose());
  return r + gamma * composite.maxCoeff();
}

double beta_pessimistic_target(const QTable& q, int s_next,
                               bool next_terminal, double r, double gamma,
                               double beta, int valid_next) {
  if (beta < 0.0 || beta > 1.0)
    throw ConfigError("beta_pessimistic_target: beta must lie in [0, 1]");
  if (next_terminal) return r;
  const double hi = row_max(q, s_next, valid_next);
  const double lo = row_min(q, s_next, valid_next);
  return r + gamma * (hi - beta * (hi - lo));
}

double q_kappa_delta(const QTable& q, int s, int a, double r, int s_next,
                     bool next_terminal, double gamma, double kappa,
                     int valid_next) {
  if (kappa < 0.0 || kappa > 1.0)
    throw ConfigError("q_kappa_delta: kappa must lie in [0, 1]");
  check_index(q, s, a);
  double mixed = 0.0;
  if (!next_terminal) {
    const double hi = row_max(q, s_next, valid_next);
    const double lo = row_min(q, s_next, valid_next);
    mixed = (1.0 - kappa) * hi + kappa * lo;
  }
  return r + gamma * mixed - q.values(s, a);
}

void minimax_q_step(QTable& q, int s, int a, double r, int s_next,
                    bool next_terminal, double gamma, int valid_next) {
  check_index(q, s, a);
  double bootstrap = 0.0;
  if (!next_terminal) bootstrap = row_min(q, s_next, valid_next);
  q.values(s, a) = std::max(q.values(s, a), r + gamma * bootstrap);
  q.visits(s, a) += 1;
}

TabularPolicy cpi_mix(const TabularPolicy& pi_old, const TabularPolicy& pi_new,
                      double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ConfigError("cpi_mix: alpha must lie in [0, 1]");
  if (pi_old.probs.rows() != pi_new.probs.rows() ||
      pi_old.probs.cols() != pi_new.probs.cols())
    throw ShapeError("cpi_mix: policy shapes differ");
  TabularPolicy out;
  out.probs = (1.0 - alpha) * pi_old.probs + alpha * pi_new.probs;
  return out;
}

BiasAlgo parse_bias_algo(const std::string& name) {
  if (name == "q") return BiasAlgo::kQ;
  if (name == "double_q") return BiasAlgo::kDoubleQ;
  if (name == "maxmin") return BiasAlgo::kMaxMin;
  if (name == "beta_pessimistic") return BiasAlgo::kBetaPessimistic;
  if (name == "q_kappa") return BiasAlgo::kQKappa;
  if (name == "minimax") return BiasAlgo::kMiniMax;
  throw ConfigError("unknown tabular algo: " + name);
}

std::string bias_algo_name(BiasAlgo algo) {
  switch (algo) {
    case BiasAlgo::kQ: return "q";
    case BiasAlgo::kDoubleQ: return "double_q";
    case BiasAlgo::kMaxMin: return "maxmin";
    case BiasAlgo::kBetaPessimistic: return "beta_pessimistic";
    case BiasAlgo::kQKappa: return "q_kappa";
    case BiasAlgo::kMiniMax: return "minimax";
  }
  throw ConfigError("bad BiasAlgo value");
}

namespace {

// Uniform choice among the argmax entries of the first `n` values.
int greedy_tiebreak(const Eigen::VectorXd& values, int n, Rng& rng) {
  const double best = values.head(n).maxCoeff();
  int count = 0;
  for (int a = 0; a < n; ++a)
    if (values(a) == best) ++count;
  int pick = rng.uniform_int(count);
  for (int a = 0; a < n; ++a) {
    if (values(a) != best) continue;
    if (pick == 0) return a;
    --pick;
  }
  return n - 1;
}

struct TabularLearner {
  BiasAlgo algo;
  BiasConfig cfg;
  double gamma;
  std::vector<QTable> tables;

  TabularLearner(const TabularMDP& mdp, BiasAlgo algo_, const BiasConfig& c)
      : algo(algo_), cfg(c), gamma(mdp.gamma) {
    int n_tables = 1;
    if (algo == BiasAlgo::kDoubleQ) n_tables = 2;
    if (algo == BiasAlgo::kMaxMin) n_tables = std::max(1, cfg.maxmin_tables);
    tables.assign(n_tables, QTable::zeros(mdp.n_states, mdp.n_actions));
  }

  // Composite row the behavior policy acts on.
  Eigen::VectorXd composite_row(int s) const {
    switch (algo) {
      case BiasAlgo::kDoubleQ:
        return 0.5 * (tables[0].values.row(s) + tables[1].values.row(s));
      case BiasAlgo::kMaxMin: {
        Eigen::VectorXd row = tables[0].values.row(s);
        for (std::size_t i = 1; i < tables.size(); ++i)
          row = row.cwiseMin(tables[i].values.row(s).transpose());
        return row;
      }
      default:
        return tables[0].values.row(s);
    }
  }

  int act(int s, int n_valid, Rng& rng) {
    if (rng.uniform01() < cfg.epsilon) return rng.uniform_int(n_valid);
    return greedy_tiebreak(composite_row(s), n_valid, rng);
  }

  void observe(int s, int a, double r, int s_next, bool next_terminal,
               int valid_next, Rng& rng) {
    switch (algo) {
      case BiasAlgo::kQ:
        q_learning_step(tables[0], s, a, r, s_next, next_terminal, cfg.lr,
                        gamma, valid_next);
        break;
      case BiasAlgo::kDoubleQ:
        double_q_step(tables[0], tables[1], s, a, r, s_next, next_terminal,
                      cfg.lr, gamma, rng, valid_next);
        break;
      case BiasAlgo::kMaxMin: {
        const int k = rng.uniform_int(static_cast<int>(tables.size()));
        const double y =
            maxmin_target(tables, s_next, next_terminal, r, gamma, valid_next);
        QTable& q = tables[k];
        q.values(s, a) = (1.0 - cfg.lr) * q.values(s, a) + cfg.lr * y;
        q.visits(s, a) += 1;
        break;
      }
      case BiasAlgo::kBetaPessimistic: {
        const double y = beta_pessimistic_target(
            tables[0], s_next, next_terminal, r, gamma, cfg.beta, valid_next);
        QTable& q = tables[0];
        q.values(s, a) = (1.0 - cfg.lr) * q.values(s, a) + cfg.lr * y;
        q.visits(s, a) += 1;
        break;
      }
      case BiasAlgo::kQKappa: {
        const double delta = q_kappa_delta(tables[0], s, a, r, s_next,
                                           next_terminal, gamma, cfg.kappa,
                                           valid_next);
        tables[0].values(s, a) += cfg.lr * delta;
        tables[0].visits(s, a) += 1;
        break;
      }
      case BiasAlgo::kMiniMax:
        minimax_q_step(tables[0], s, a, r, s_next, next_terminal, gamma,
                       valid_next);
        break;
    }
  }
};

}  // namespace

BiasReport bias_experiment(const TabularMDP& mdp, BiasAlgo algo, int episodes,
                           int seeds, const BiasConfig& cfg) {
  validate_mdp(mdp);
  if (episodes < 1 || seeds < 1)
    throw ConfigError("bias_experiment: episodes and seeds must be >= 1");

  const QTable q_star = value_iteration(mdp, 1e-12);
  const int start = mdp.start_state;
  const int n_start_actions = mdp.action_count[start];
  const double q_star_best =
      q_star.values.row(start).head(n_start_actions).maxCoeff();

  BiasReport report;
  report.algo = bias_algo_name(algo);
  report.q_star_start = q_star.values.row(start).head(n_start_actions);

  double dev_sum = 0.0, dev_sq_sum = 0.0;
  int suboptimal = 0;
  for (int k = 0; k < seeds; ++k) {
    Rng rng(static_cast<std::uint64_t>(k));
    TabularLearner learner(mdp, algo, cfg);
    // Episode cap guards against non-terminating behavior in loopy MDPs.
    const int max_steps = 100 * mdp.n_states;
    for (int ep = 0; ep < episodes; ++ep) {
      int s = start;
      for (int t = 0; t < max_steps && !mdp.terminal[s]; ++t) {
        const int a = learner.act(s, mdp.action_count[s], rng);
        auto [s_next, r] = mdp_sample_step(mdp, s, a, rng);
        learner.observe(s, a, r, s_next, mdp.terminal[s_next],
                        mdp.action_count[s_next], rng);
        s = s_next;
      }
    }

    BiasSeedResult res;
    res.seed = static_cast<std::uint64_t>(k);
    res.start_q = learner.composite_row(start).head(n_start_actions);
    res.deviation = res.start_q(0) - q_star.values(start, 0);
    int greedy = 0;
    res.start_q.maxCoeff(&greedy);
    res.suboptimal = q_star.values(start, greedy) < q_star_best - 1e-12;
    dev_sum += res.deviation;
    dev_sq_sum += res.deviation * res.deviation;
    if (res.suboptimal) ++suboptimal;
    report.per_seed.push_back(std::move(res));
  }

  const double n = static_cast<double>(seeds);
  report.mean_deviation = dev_sum / n;
  const double var =
      std::max(0.0, dev_sq_sum / n - report.mean_deviation * report.mean_deviation);
  report.std_error = (seeds > 1) ? std::sqrt(var / (n - 1.0)) : 0.0;
  report.suboptimal_fraction = suboptimal / n;
  return report;
}

}  // namespace sqt
