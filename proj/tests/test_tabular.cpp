#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sqt/error.hpp"
#include "sqt/tabular.hpp"
#include "test_util.hpp"

using namespace sqt;
using namespace sqt::testutil;

TEST_CASE("value_iteration: single terminal step") {
  const QTable q = value_iteration(single_step_mdp(1.0), 1e-12);
  CHECK(q.values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("value_iteration: two-step chain matches the geometric sum") {
  const QTable q = value_iteration(chain2_mdp(0.5), 1e-12);
  CHECK(q.values(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.values(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("value_iteration: fixed point under one more backup") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const TabularMDP mdp = random_mdp(rng, 6, 3, 0.9);
    const double tol = 1e-11;
    const QTable q = value_iteration(mdp, tol);
    // Re-apply a single Bellman backup by hand and compare.
    double residual = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
      for (int a = 0; a < mdp.n_actions; ++a) {
        double v = mdp.r_mean(s, a);
        for (int s2 = 0; s2 < mdp.n_states; ++s2)
          v += mdp.gamma * mdp.p(s, a, s2) * q.values.row(s2).maxCoeff();
        residual = std::max(residual, std::abs(v - q.values(s, a)));
      }
    CHECK(residual < tol);
  }
}

TEST_CASE("value_iteration: tol validation") {
  CHECK_THROWS_AS(value_iteration(single_step_mdp(1.0), 0.0), ConfigError);
}

TEST_CASE("q_learning_step: lr=1 with terminal successor is an overwrite") {
  QTable q = QTable::zeros(2, 2);
  q.values(0, 0) = 5.0;
  q_learning_step(q, 0, 0, -2.5, 1, /*next_terminal=*/true, 1.0, 0.9);
  CHECK(q.values(0, 0) == -2.5);
  CHECK(q.visits(0, 0) == 1);
}

TEST_CASE("q_learning_step: lr=0 changes nothing") {
  QTable q = QTable::zeros(2, 2);
  q.values.setConstant(3.0);
  q_learning_step(q, 0, 1, 10.0, 1, false, 0.0, 0.9);
  CHECK(q.values(0, 1) == 3.0);
}

TEST_CASE("q_learning_step: hand arithmetic") {
  QTable q = QTable::zeros(2, 2);
  q.values(1, 0) = 1.0;
  q.values(1, 1) = 3.0;
  q_learning_step(q, 0, 0, 1.0, 1, false, 0.5, 0.5);
  CHECK(q.values(0, 0) == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("q_learning_step: index errors") {
  QTable q = QTable::zeros(2, 2);
  CHECK_THROWS_AS(q_learning_step(q, 5, 0, 0.0, 1, true, 0.5, 0.9),
                  std::out_of_range);
  CHECK_THROWS_AS(q_learning_step(q, 0, 7, 0.0, 1, true, 0.5, 0.9),
                  std::out_of_range);
}

TEST_CASE("double_q_step: identical tables reduce to plain q-learning") {
  QTable qa = QTable::zeros(2, 3), qb = QTable::zeros(2, 3);
  qa.values.row(1) << 1.0, 4.0, 2.0;
  qb.values = qa.values;
  QTable reference = qa;
  q_learning_step(reference, 0, 1, 0.5, 1, false, 0.1, 0.9);
  Rng rng(3);
  const int updated = double_q_step(qa, qb, 0, 1, 0.5, 1, false, 0.1, 0.9, rng);
  const QTable& got = (updated == 0) ? qa : qb;
  CHECK(got.values(0, 1) == reference.values(0, 1));
}

TEST_CASE("double_q_step: target read from the other table at own argmax") {
  // Find a seed whose coin picks table A, then verify the cross-read.
  for (int seed = 0; seed < 16; ++seed) {
    QTable qa = QTable::zeros(2, 3), qb = QTable::zeros(2, 3);
    qa.values.row(1) << 5.0, 9.0, 7.0;  // argmax action 1
    qb.values.row(1) << 2.0, 4.0, 8.0;  // value read: 4
    Rng rng(seed);
    const int updated =
        double_q_step(qa, qb, 0, 0, 1.0, 1, false, 1.0, 0.5, rng);
    if (updated != 0) continue;
    CHECK(qa.values(0, 0) == doctest::Approx(1.0 + 0.5 * 4.0).epsilon(1e-15));
    return;
  }
  FAIL("no seed picked table A");
}

TEST_CASE("double_q_step: lr=0 changes nothing") {
  QTable qa = QTable::zeros(2, 2), qb = QTable::zeros(2, 2);
  qa.values.setConstant(1.0);
  qb.values.setConstant(2.0);
  Rng rng(0);
  double_q_step(qa, qb, 0, 0, 9.0, 1, false, 0.0, 0.9, rng);
  CHECK(qa.values(0, 0) == 1.0);
  CHECK(qb.values(0, 0) == 2.0);
}

TEST_CASE("maxmin_target: single table is the plain target") {
  QTable q = QTable::zeros(2, 2);
  q.values.row(1) << 2.0, 4.0;
  CHECK(maxmin_target({q}, 1, false, 0.5, 0.5) ==
        doctest::Approx(0.5 + 0.5 * 4.0).epsilon(1e-15));
}

TEST_CASE("maxmin_target: hand arithmetic with two tables") {
  QTable a = QTable::zeros(2, 1), b = QTable::zeros(2, 1);
  a.values(1, 0) = 2.0;
  b.values(1, 0) = 4.0;
  CHECK(maxmin_target({a, b}, 1, false, 0.0, 1.0) == 2.0);
}

TEST_CASE("maxmin_target: terminal gives r, empty list throws") {
  QTable q = QTable::zeros(2, 2);
  CHECK(maxmin_target({q}, 1, true, -3.5, 1.0) == -3.5);
  CHECK_THROWS_AS(maxmin_target({}, 1, false, 0.0, 1.0), ConfigError);
}

TEST_CASE("beta_pessimistic_target: endpoints and hand value") {
  QTable q = QTable::zeros(2, 2);
  q.values.row(1) << 1.0, 3.0;
  const double q_target =
      beta_pessimistic_target(q, 1, false, 0.0, 1.0, 0.0);
  CHECK(q_target == 3.0);
  CHECK(beta_pessimistic_target(q, 1, false, 0.0, 1.0, 1.0) == 1.0);
  CHECK(beta_pessimistic_target(q, 1, false, 0.0, 1.0, 0.25) ==
        doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(beta_pessimistic_target(q, 1, false, 0.0, 1.0, 1.5),
                  ConfigError);
}

TEST_CASE("beta_pessimistic_target: monotone non-increasing in beta") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    QTable q = QTable::zeros(2, 4);
    for (int a = 0; a < 4; ++a) q.values(1, a) = rng.uniform(-5.0, 5.0);
    const double r = rng.uniform(-1.0, 1.0);
    double prev = beta_pessimistic_target(q, 1, false, r, 0.97, 0.0);
    for (double beta : {0.25, 0.5, 0.75, 1.0}) {
      const double cur = beta_pessimistic_target(q, 1, false, r, 0.97, beta);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
    // Endpoints coincide with the q-learning / worst-case targets.
    QTable copy = q;
    q_learning_step(copy, 0, 0, r, 1, false, 1.0, 0.97);
    CHECK(beta_pessimistic_target(q, 1, false, r, 0.97, 0.0) ==
          doctest::Approx(copy.values(0, 0)).epsilon(1e-14));
  }
}

TEST_CASE("q_kappa_delta: endpoints and hand value") {
  QTable q = QTable::zeros(2, 2);
  q.values.row(1) << 1.0, 3.0;
  // kappa = 0: standard residual with the max bootstrap.
  CHECK(q_kappa_delta(q, 0, 0, 1.0, 1, false, 1.0, 0.0) == 4.0);
  // kappa = 1: worst-case residual.
  CHECK(q_kappa_delta(q, 0, 0, 1.0, 1, false, 1.0, 1.0) == 2.0);
  CHECK(q_kappa_delta(q, 0, 0, 1.0, 1, false, 1.0, 0.5) ==
        doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(q_kappa_delta(q, 0, 0, 1.0, 1, false, 1.0, -0.1),
                  ConfigError);
}

TEST_CASE("q_kappa_delta: monotone non-increasing in kappa") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    QTable q = QTable::zeros(2, 4);
    for (int a = 0; a < 4; ++a) q.values(1, a) = rng.uniform(-5.0, 5.0);
    double prev = q_kappa_delta(q, 0, 0, 0.3, 1, false, 0.9, 0.0);
    for (double kappa : {0.3, 0.6, 1.0}) {
      const double cur = q_kappa_delta(q, 0, 0, 0.3, 1, false, 0.9, kappa);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("minimax_q_step: keeps the larger of old and candidate") {
  QTable q = QTable::zeros(2, 2);
  q.values(0, 0) = 10.0;
  q.values.row(1) << 0.5, 2.0;
  minimax_q_step(q, 0, 0, 1.0, 1, false, 1.0);
  CHECK(q.values(0, 0) == 10.0);  // candidate 1.5 rejected

  q.values(0, 0) = 0.0;
  minimax_q_step(q, 0, 0, 1.0, 1, false, 1.0);
  CHECK(q.values(0, 0) == 1.5);
  minimax_q_step(q, 0, 0, 1.0, 1, false, 1.0);
  CHECK(q.values(0, 0) == 1.5);  // idempotent
}

TEST_CASE("minimax_q_step: never decreases any entry") {
  Rng rng(21);
  QTable q = QTable::zeros(4, 3);
  for (int i = 0; i < 2000; ++i) {
    const int s = rng.uniform_int(4);
    const int a = rng.uniform_int(3);
    const int s2 = rng.uniform_int(4);
    const double before = q.values(s, a);
    minimax_q_step(q, s, a, rng.uniform(-1.0, 1.0), s2, s2 == 3, 0.9);
    CHECK(q.values(s, a) >= before);
  }
}

TEST_CASE("cpi_mix: endpoints and hand mix") {
  TabularPolicy uniform{Eigen::MatrixXd::Constant(3, 2, 0.5)};
  TabularPolicy det{Eigen::MatrixXd::Zero(3, 2)};
  det.probs.col(0).setOnes();

  CHECK(cpi_mix(uniform, det, 0.0).probs == uniform.probs);
  CHECK(cpi_mix(uniform, det, 1.0).probs == det.probs);
  const TabularPolicy half = cpi_mix(uniform, det, 0.5);
  CHECK(half.probs(0, 0) == 0.75);
  CHECK(half.probs(0, 1) == 0.25);
}

TEST_CASE("cpi_mix: rows still sum to one") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd a(4, 3), b(4, 3);
    for (int s = 0; s < 4; ++s) {
      double sa = 0.0, sb = 0.0;
      for (int c = 0; c < 3; ++c) {
        a(s, c) = rng.uniform01() + 1e-3;
        b(s, c) = rng.uniform01() + 1e-3;
        sa += a(s, c);
        sb += b(s, c);
      }
      a.row(s) /= sa;
      b.row(s) /= sb;
    }
    const TabularPolicy mixed =
        cpi_mix({a}, {b}, rng.uniform01());
    for (int s = 0; s < 4; ++s)
      CHECK(mixed.probs.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cpi_mix: shape and range validation") {
  TabularPolicy a{Eigen::MatrixXd::Constant(2, 2, 0.5)};
  TabularPolicy b{Eigen::MatrixXd::Constant(3, 2, 0.5)};
  CHECK_THROWS_AS(cpi_mix(a, b, 0.5), ShapeError);
  CHECK_THROWS_AS(cpi_mix(a, a, 1.5), ConfigError);
}

TEST_CASE("bias_experiment: noiseless rewards leave no bias") {
  const TabularMDP mdp = make_maximization_bias_mdp(8, -0.1, 0.0);
  const BiasReport report = bias_experiment(mdp, BiasAlgo::kQ, 20000, 10);
  CHECK(std::abs(report.mean_deviation) < 0.05);
}

TEST_CASE("bias_experiment: q overestimates, double-q does not") {
  const TabularMDP mdp = make_maximization_bias_mdp(8, -0.1, 1.0);
  const BiasReport q = bias_experiment(mdp, BiasAlgo::kQ, 300, 40);
  CHECK(q.mean_deviation > 3.0 * q.std_error);
  const BiasReport dq = bias_experiment(mdp, BiasAlgo::kDoubleQ, 300, 40);
  CHECK(dq.mean_deviation <= 3.0 * dq.std_error);
}

TEST_CASE("bias_experiment: every algo id runs") {
  const TabularMDP mdp = make_maximization_bias_mdp(4, -0.1, 0.5);
  for (const char* name :
       {"q", "double_q", "maxmin", "beta_pessimistic", "q_kappa", "minimax"}) {
    const BiasReport report =
        bias_experiment(mdp, parse_bias_algo(name), 50, 3);
    CHECK(report.per_seed.size() == 3);
    CHECK(report.algo == name);
  }
  CHECK_THROWS_AS(parse_bias_algo("sarsa"), ConfigError);
}
