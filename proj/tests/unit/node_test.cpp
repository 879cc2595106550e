#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <thread>

#include "dfrl/error.hpp"
#include "dfrl/learning.hpp"
#include "dfrl/node.hpp"

using namespace dfrl;

namespace {

NodeConfig config(NodeId id, Algorithm algo = Algorithm::kQLearning, std::uint64_t seed = 5) {
  NodeConfig c;
  c.node_id = id;
  c.algorithm = algo;
  c.arena = {8, 8, 2};
  c.seed = seed;
  c.iterations_total = 2000;
  c.metrics_every = 100;
  return c;
}

std::string bytes_of(const QTable& t) {
  return {reinterpret_cast<const char*>(t.values().data()), t.size() * sizeof(double)};
}

}  // namespace

TEST(NodeTest, AdvanceStopsAtTotal) {
  Node n(config(1));
  EXPECT_EQ(n.advance(1500), 1500u);
  EXPECT_FALSE(n.finished());
  EXPECT_EQ(n.advance(1000), 500u);
  EXPECT_TRUE(n.finished());
  EXPECT_EQ(n.advance(10), 0u);
  EXPECT_EQ(n.status().iteration, 2000u);
  EXPECT_TRUE(n.status().finished);
}

TEST(NodeTest, DeterministicForSameSeed) {
  for (Algorithm algo : {Algorithm::kQLearning, Algorithm::kSarsa}) {
    Node a(config(1, algo));
    Node b(config(1, algo));
    a.advance(2000);
    b.advance(700);
    b.advance(1300);
    EXPECT_TRUE(a.snapshot().bit_equal(b.snapshot()));
    EXPECT_EQ(a.status(), b.status());
  }
  Node c(config(1, Algorithm::kQLearning, 6));
  Node d(config(1, Algorithm::kQLearning, 5));
  c.advance(2000);
  d.advance(2000);
  EXPECT_FALSE(c.snapshot().bit_equal(d.snapshot()));
}

TEST(NodeTest, MetricsSampledLazilyAtMultiples) {
  Node n(config(3));
  n.advance(250);
  auto recs = n.drain_records();
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].iteration, 100u);
  EXPECT_EQ(recs[1].iteration, 200u);
  EXPECT_EQ(recs[0].node_id, 3u);

  n.advance(50);  // reaches 300, sample still pending
  EXPECT_TRUE(n.drain_records().empty());
  n.flush_sample();
  recs = n.drain_records();
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].iteration, 300u);
  EXPECT_EQ(recs[0].sum_q, n.status().sum_q);
  n.flush_sample();
  EXPECT_TRUE(n.drain_records().empty());
}

TEST(NodeTest, CumulativeRewardIsRunningSum) {
  Node n(config(1));
  for (int i = 0; i < 50; ++i) {
    const double before = n.status().cumulative_reward;
    n.advance(1);
    const double delta = n.status().cumulative_reward - before;
    EXPECT_TRUE(delta == 1.0 || delta == 0.0 || delta == -10.0) << delta;
  }
}

TEST(NodeTest, ForwardVisitLeavesTableAlone) {
  Node n(config(2));
  n.advance(500);
  const QTable before = n.snapshot();
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kPairwiseAverage);
  a = start_round(a, QTable(8, 3));
  const MobileAgent out = n.visit(a);
  EXPECT_EQ(out.position, 2u);
  EXPECT_TRUE(n.snapshot().bit_equal(before));
  EXPECT_EQ(n.status().rounds_applied, 0u);
}

TEST(NodeTest, BackwardVisitInstallsPayload) {
  Node n(config(2));
  n.advance(300);
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kElementwiseMax);
  QTable payload(8, 3);
  payload.set(4, 1, 2.5);
  a = start_round(a, payload);
  a = forward_visit(a, QTable(8, 3));
  a = turn_around(a, QTable(8, 3)).first;
  n.visit(a);
  EXPECT_TRUE(n.snapshot().bit_equal(a.payload.value()));
  EXPECT_EQ(n.status().rounds_applied, 1u);
}

TEST(NodeTest, RejectsForeignAgent) {
  Node n(config(2, Algorithm::kSarsa));
  MobileAgent a = make_agent(1, {2}, AggregationMethod::kPairwiseAverage, Algorithm::kQLearning);
  EXPECT_THROW(n.visit(a), Error);
  EXPECT_THROW(n.visit(make_agent(1, {7}, AggregationMethod::kPairwiseAverage)), Error);
}

TEST(NodeTest, InstallChecksShape) {
  Node n(config(1));
  EXPECT_THROW(n.install(QTable(2, 2)), Error);
  QTable t(8, 3);
  t.set(0, 0, 3.0);
  n.install(t);
  EXPECT_EQ(n.status().sum_q, 3.0);
}

TEST(NodeTest, InvalidConfigRejected) {
  NodeConfig c = config(1);
  c.metrics_every = 0;
  EXPECT_THROW(c.validate(), Error);
  c = config(1);
  c.arena = {4, 4, 9};
  EXPECT_THROW(c.validate(), Error);
  c = config(1);
  c.params.alpha = -1;
  EXPECT_THROW(Node{c}, Error);
}

// Every concurrent snapshot must equal a table the learner actually passed
// through; a torn read would produce a table that never existed.
TEST(NodeStressTest, SnapshotsNeverSeeHalfAppliedSteps) {
  NodeConfig c = config(1);
  c.iterations_total = 20'000;
  std::set<std::string> legal;
  {
    Node reference(c);
    legal.insert(bytes_of(reference.snapshot()));
    while (reference.advance(1) == 1) legal.insert(bytes_of(reference.snapshot()));
  }

  Node node(c);
  std::atomic<bool> done{false};
  std::thread learner([&] {
    while (node.advance(7) > 0) {
    }
    done = true;
  });
  std::size_t checked = 0;
  std::size_t illegal = 0;
  while (!done) {
    if (!legal.contains(bytes_of(node.snapshot()))) ++illegal;
    const NodeStatus st = node.status();
    EXPECT_LE(st.iteration, c.iterations_total);
    ++checked;
  }
  learner.join();
  EXPECT_GT(checked, 0u);
  EXPECT_EQ(illegal, 0u);
}

TEST(NodeStressTest, VisitsInterleaveWithLearning) {
  NodeConfig c = config(2);
  c.iterations_total = 30'000;
  Node node(c);
  std::thread learner([&] {
    while (node.advance(3) > 0) {
    }
  });
  std::size_t rounds = 0;
  do {
    QTable payload(8, 3);
    payload.set(static_cast<StateId>(rounds % 8), 0, static_cast<double>(rounds));
    MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kElementwiseMax);
    a = start_round(a, payload);
    a = node.visit(a);  // forward: read-only
    a = turn_around(a, QTable(8, 3)).first;
    node.visit(a);  // backward: wholesale replacement
    ++rounds;
  } while (!node.finished());
  learner.join();
  EXPECT_EQ(node.status().rounds_applied, rounds);
  EXPECT_GT(rounds, 0u);
}
