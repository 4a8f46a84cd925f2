#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "sqt/error.hpp"
#include "sqt/replay.hpp"

using namespace sqt;

namespace {

// Transition tagged via its reward so eviction order is observable.
Transition tagged(double tag) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(2, tag);
  t.action = Eigen::VectorXd::Constant(1, tag);
  t.reward = tag;
  t.next_state = Eigen::VectorXd::Constant(2, tag + 0.5);
  t.done = false;
  return t;
}

}  // namespace

TEST_CASE("push: FIFO eviction keeps the newest entries in order") {
  ReplayBuffer buf(2, 2, 1);
  buf.push(tagged(1));
  buf.push(tagged(2));
  buf.push(tagged(3));
  const auto snap = buf.snapshot();
  REQUIRE(snap.size() == 2);
  CHECK(snap[0].reward == 2.0);
  CHECK(snap[1].reward == 3.0);
}

TEST_CASE("push: size grows to capacity and stays there") {
  ReplayBuffer buf(5, 2, 1);
  buf.push(tagged(0));
  CHECK(buf.size() == 1);
  for (int i = 1; i < 12; ++i) buf.push(tagged(i));
  CHECK(buf.size() == 5);
}

TEST_CASE("push: dimension mismatch throws") {
  ReplayBuffer buf(4, 2, 1);
  Transition t = tagged(1);
  t.action = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(buf.push(t), ShapeError);
  t = tagged(1);
  t.next_state = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(buf.push(t), ShapeError);
}

TEST_CASE("sample: single stored item fills the whole batch") {
  ReplayBuffer buf(8, 2, 1);
  buf.push(tagged(7));
  Rng rng(0);
  const auto batch = buf.sample(rng, 4);
  REQUIRE(batch.size() == 4);
  for (const auto& t : batch) CHECK(t.reward == 7.0);
}

TEST_CASE("sample: empty buffer throws") {
  ReplayBuffer buf(8, 2, 1);
  Rng rng(0);
  CHECK_THROWS_AS(buf.sample(rng, 1), ConfigError);
}

TEST_CASE("sample: uniform frequencies over 1e5 draws") {
  ReplayBuffer buf(10, 2, 1);
  for (int i = 0; i < 10; ++i) buf.push(tagged(i));
  Rng rng(123);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  const auto batch = buf.sample(rng, n);
  for (const auto& t : batch) ++counts[static_cast<int>(t.reward)];
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - n / 10) < 3.0 * sigma);
}

TEST_CASE("sample: fixed seed replays the same batch") {
  ReplayBuffer buf(16, 2, 1);
  for (int i = 0; i < 16; ++i) buf.push(tagged(i));
  Rng r1(9), r2(9);
  const auto a = buf.sample(r1, 32);
  const auto b = buf.sample(r2, 32);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].reward == b[i].reward);
}

TEST_CASE("property: eviction order equals insertion order") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int capacity = 1 + rng.uniform_int(20);
    const int pushes = 1 + rng.uniform_int(60);
    ReplayBuffer buf(capacity, 2, 1);
    for (int i = 0; i < pushes; ++i) buf.push(tagged(i));
    const auto snap = buf.snapshot();
    const int expected = std::min(capacity, pushes);
    REQUIRE(static_cast<int>(snap.size()) == expected);
    for (int i = 0; i < expected; ++i)
      CHECK(snap[i].reward == pushes - expected + i);
  }
}

TEST_CASE("property: sampling never returns an evicted entry") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int capacity = 1 + rng.uniform_int(10);
    const int pushes = capacity + 1 + rng.uniform_int(40);
    ReplayBuffer buf(capacity, 2, 1);
    for (int i = 0; i < pushes; ++i) buf.push(tagged(i));
    const auto batch = buf.sample(rng, 200);
    for (const auto& t : batch) CHECK(t.reward >= pushes - capacity);
  }
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(ReplayBuffer(0, 2, 1), ConfigError);
  CHECK_THROWS_AS(ReplayBuffer(4, 0, 1), ConfigError);
}
