#include <gtest/gtest.h>

#include <map>
#include <memory>

#include "dfrl/error.hpp"
#include "dfrl/federation.hpp"
#include "dfrl/learning.hpp"
#include "dfrl/rng.hpp"

using namespace dfrl;

namespace {

QTable scalar(double v) { return QTable::from_rows({{v}}); }

QTable random_table(Rng& rng) {
  std::vector<double> v(24);
  for (double& x : v) x = -10.0 + 20.0 * rng.uniform01();
  return QTable::from_values(8, 3, std::move(v));
}

// Table holder that applies visits exactly like a node would.
class MemoryPeer : public FederationPeer {
 public:
  MemoryPeer(NodeId id, QTable table, Algorithm algo = Algorithm::kQLearning)
      : id_(id), algo_(algo), table_(std::move(table)) {}
  NodeId id() const override { return id_; }
  MobileAgent visit(const MobileAgent& agent) override {
    ++visits;
    if (fail_on_visit && visits == *fail_on_visit) {
      throw Error(ErrorCode::kMigration, "node " + std::to_string(id_) + " unreachable");
    }
    return apply_visit(agent, id_, algo_, table_).agent;
  }
  QTable snapshot() override { return table_; }
  void install(const QTable& t) override { table_ = t; }

  const QTable& table() const { return table_; }
  int visits = 0;
  std::optional<int> fail_on_visit;

 private:
  NodeId id_;
  Algorithm algo_;
  QTable table_;
};

struct Ring {
  std::vector<std::unique_ptr<MemoryPeer>> owned;
  std::vector<FederationPeer*> view;

  explicit Ring(const std::vector<QTable>& tables,
                const std::vector<Algorithm>& algos = {}) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const Algorithm a = algos.empty() ? Algorithm::kQLearning : algos[i];
      owned.push_back(std::make_unique<MemoryPeer>(static_cast<NodeId>(i + 1), tables[i], a));
      view.push_back(owned.back().get());
    }
  }
  std::vector<NodeId> ids() const {
    std::vector<NodeId> out;
    for (auto* p : view) out.push_back(p->id());
    return out;
  }
};

}  // namespace

TEST(ForwardVisitTest, MaxAndAverageFold) {
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kElementwiseMax);
  a = start_round(a, scalar(4));
  EXPECT_EQ(forward_visit(a, scalar(7)).payload->at(0, 0), 7.0);

  MobileAgent b = make_agent(1, {1, 2, 3}, AggregationMethod::kPairwiseAverage);
  b = start_round(b, scalar(4));
  const MobileAgent after = forward_visit(b, scalar(0));
  EXPECT_EQ(after.payload->at(0, 0), 2.0);
  EXPECT_EQ(after.position, 2u);
  EXPECT_EQ(after.payload_count, 2u);
}

TEST(ForwardVisitTest, LocalTableUntouched) {
  Ring ring({scalar(4), scalar(9), scalar(0)});
  MobileAgent a = make_agent(1, ring.ids(), AggregationMethod::kPairwiseAverage);
  a = ring.view[0]->visit(a);
  a = ring.view[1]->visit(a);
  EXPECT_EQ(ring.owned[1]->table().at(0, 0), 9.0);
  EXPECT_EQ(a.payload->at(0, 0), 6.5);
}

TEST(ForwardVisitTest, WrongPhaseRejected) {
  MobileAgent a = make_agent(1, {1, 2}, AggregationMethod::kPairwiseAverage);
  EXPECT_THROW(forward_visit(a, scalar(0)), Error);  // no payload yet
  a = start_round(a, scalar(1));
  EXPECT_THROW(forward_visit(a, scalar(0)), Error);  // final stop needs turn_around
  EXPECT_THROW(start_round(a, scalar(1)), Error);
}

TEST(TurnAroundTest, AverageFoldOverThreeNodes) {
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kPairwiseAverage);
  a = forward_visit(start_round(a, scalar(4)), scalar(0));
  auto [agent, written] = turn_around(a, scalar(0));
  EXPECT_EQ(agent.payload->at(0, 0), 1.0);
  EXPECT_EQ(written.at(0, 0), 1.0);
  EXPECT_EQ(agent.phase, Phase::kBackward);
  EXPECT_EQ(agent.position, 1u);
}

TEST(TurnAroundTest, MaxFoldOverThreeNodes) {
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kElementwiseMax);
  a = forward_visit(start_round(a, scalar(4)), scalar(0));
  EXPECT_EQ(turn_around(a, scalar(7)).second.at(0, 0), 7.0);
}

TEST(TurnAroundTest, SingleNodeRoundCompletesImmediately) {
  MobileAgent a = make_agent(1, {5}, AggregationMethod::kPairwiseAverage);
  QTable t = scalar(3);
  const VisitOutcome out = apply_visit(a, 5, Algorithm::kQLearning, t);
  EXPECT_EQ(out.agent.round, 1u);
  EXPECT_FALSE(out.agent.round_in_progress());
  EXPECT_EQ(t.at(0, 0), 3.0);
}

TEST(BackwardVisitTest, ReplacesTableAndKeepsPayload) {
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kPairwiseAverage);
  a = forward_visit(start_round(a, scalar(4)), scalar(0));
  a = turn_around(a, scalar(0)).first;
  auto [mid, t2] = backward_visit(a, scalar(9));
  EXPECT_EQ(t2.at(0, 0), 1.0);
  EXPECT_EQ(mid.payload->at(0, 0), 1.0);
  EXPECT_EQ(mid.position, 0u);
  auto [done, t1] = backward_visit(mid, scalar(4));
  EXPECT_EQ(t1.at(0, 0), 1.0);
  EXPECT_EQ(done.round, 1u);
  EXPECT_FALSE(done.round_in_progress());
  EXPECT_EQ(done.phase, Phase::kForward);
}

TEST(BackwardVisitTest, ShapeMismatchRejected) {
  MobileAgent a = make_agent(1, {1, 2}, AggregationMethod::kPairwiseAverage);
  a = start_round(a, scalar(4));
  EXPECT_THROW(turn_around(a, QTable(2, 2)), Error);
}

TEST(ApplyVisitTest, RejectsWrongNodeAndTag) {
  MobileAgent a = make_agent(1, {1, 2}, AggregationMethod::kPairwiseAverage, Algorithm::kSarsa);
  QTable t = scalar(0);
  try {
    apply_visit(a, 2, Algorithm::kSarsa, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNodeNotInItinerary);
  }
  try {
    apply_visit(a, 1, Algorithm::kQLearning, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTagMismatch);
  }
}

TEST(MobileAgentTest, ValidateCatchesBrokenState) {
  EXPECT_THROW(make_agent(1, {}, AggregationMethod::kPairwiseAverage), Error);
  EXPECT_THROW(make_agent(1, {1, 1}, AggregationMethod::kPairwiseAverage), Error);
  MobileAgent a = make_agent(1, {1, 2}, AggregationMethod::kPairwiseAverage);
  a.position = 2;
  EXPECT_THROW(a.validate(), Error);
  EXPECT_THROW(a.current_node(), Error);
  a.position = 0;
  a.phase = Phase::kBackward;
  EXPECT_THROW(a.validate(), Error);
}

TEST(RunRoundTest, AllZeroTablesStayZero) {
  for (auto m : {AggregationMethod::kPairwiseAverage, AggregationMethod::kRunningMean,
                 AggregationMethod::kElementwiseMax}) {
    Ring ring(std::vector<QTable>(5, QTable(8, 3)));
    MobileAgent a = make_agent(1, ring.ids(), m);
    const RoundReport r = run_round(ring.view, a);
    EXPECT_FALSE(r.aborted);
    for (auto& p : ring.owned) EXPECT_TRUE(p->table().bit_equal(QTable(8, 3)));
  }
}

TEST(RunRoundTest, ThreeNodeAverage) {
  Ring ring({scalar(4), scalar(0), scalar(0)});
  MobileAgent a = make_agent(1, ring.ids(), AggregationMethod::kPairwiseAverage);
  const RoundReport r = run_round(ring.view, a);
  ASSERT_FALSE(r.aborted) << r.error;
  EXPECT_TRUE(r.identical);
  for (auto& p : ring.owned) EXPECT_EQ(p->table().at(0, 0), 1.0);
  EXPECT_EQ(a.round, 1u);
  EXPECT_EQ(r.nodes[0].pre_sum_q, 4.0);
  EXPECT_EQ(r.nodes[0].post_sum_q, 1.0);
  // Forward: 1,2,3; backward: 2,1.
  EXPECT_EQ(ring.owned[0]->visits, 2);
  EXPECT_EQ(ring.owned[1]->visits, 2);
  EXPECT_EQ(ring.owned[2]->visits, 1);
}

TEST(RunRoundTest, FiveRandomTablesEndIdenticalToPayload) {
  Rng rng(12);
  for (auto m : {AggregationMethod::kPairwiseAverage, AggregationMethod::kRunningMean,
                 AggregationMethod::kElementwiseMax}) {
    std::vector<QTable> tables;
    for (int i = 0; i < 5; ++i) tables.push_back(random_table(rng));
    QTable expect = tables[0];
    for (std::size_t i = 1; i < 5; ++i) expect = aggregate(m, expect, i, tables[i]);

    Ring ring(tables);
    MobileAgent a = make_agent(1, ring.ids(), m);
    const RoundReport r = run_round(ring.view, a);
    ASSERT_FALSE(r.aborted);
    EXPECT_TRUE(r.identical);
    for (auto& p : ring.owned) EXPECT_TRUE(p->table().bit_equal(expect));
  }
}

TEST(RunRoundTest, HeterogeneousTagSkipsOtherNodes) {
  Ring ring({scalar(4), scalar(9), scalar(7)},
            {Algorithm::kQLearning, Algorithm::kSarsa, Algorithm::kQLearning});
  const std::vector<NodeDescriptor> nodes = {
      {1, Algorithm::kQLearning}, {2, Algorithm::kSarsa}, {3, Algorithm::kQLearning}};
  MobileAgent a = make_agent(1, filter_itinerary(nodes, Algorithm::kQLearning),
                             AggregationMethod::kElementwiseMax, Algorithm::kQLearning);
  ASSERT_FALSE(run_round(ring.view, a).aborted);
  EXPECT_EQ(ring.owned[0]->table().at(0, 0), 7.0);
  EXPECT_EQ(ring.owned[1]->table().at(0, 0), 9.0);
  EXPECT_EQ(ring.owned[1]->visits, 0);
  EXPECT_EQ(ring.owned[2]->table().at(0, 0), 7.0);
}

TEST(RunRoundTest, FailureRollsBackWrittenNodes) {
  // Node 2 fails on its second (backward) visit, after node 3 was written.
  Ring ring({scalar(4), scalar(0), scalar(0)});
  ring.owned[1]->fail_on_visit = 2;
  MobileAgent a = make_agent(1, ring.ids(), AggregationMethod::kPairwiseAverage);
  const RoundReport r = run_round(ring.view, a);
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.error.find("unreachable"), std::string::npos);
  EXPECT_EQ(ring.owned[0]->table().at(0, 0), 4.0);
  EXPECT_EQ(ring.owned[1]->table().at(0, 0), 0.0);
  EXPECT_EQ(ring.owned[2]->table().at(0, 0), 0.0);
  EXPECT_EQ(a.round, 0u);
  EXPECT_FALSE(a.round_in_progress());

  // The parked agent retries cleanly next time.
  ring.owned[1]->fail_on_visit.reset();
  const RoundReport retry = run_round(ring.view, a);
  EXPECT_FALSE(retry.aborted);
  EXPECT_EQ(ring.owned[2]->table().at(0, 0), 1.0);
  EXPECT_NE(format_round_report(retry).find("status=ok"), std::string::npos);
}

TEST(RunRoundTest, MissingPeerAborts) {
  Ring ring({scalar(1), scalar(2)});
  MobileAgent a = make_agent(1, {1, 2, 3}, AggregationMethod::kPairwiseAverage);
  const RoundReport r = run_round(ring.view, a);
  EXPECT_TRUE(r.aborted);
  EXPECT_EQ(ring.owned[0]->table().at(0, 0), 1.0);
}

TEST(RunRoundTest, AverageWeightsPreferLaterNodes) {
  Rng rng(21);
  for (std::size_t n = 3; n <= 5; ++n) {
    std::vector<QTable> tables;
    for (std::size_t i = 0; i < n; ++i) tables.push_back(random_table(rng));
    Ring ring(tables);
    MobileAgent a = make_agent(1, ring.ids(), AggregationMethod::kPairwiseAverage);
    ASSERT_FALSE(run_round(ring.view, a).aborted);
    const QTable& got = ring.owned[0]->table();
    for (std::size_t k = 0; k < 24; ++k) {
      double expect = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        const int e = i == 1 ? static_cast<int>(n - 1) : static_cast<int>(n - i + 1);
        expect += std::ldexp(tables[i - 1].values()[k], -e);
      }
      EXPECT_NEAR(got.values()[k], expect, 1e-12);
    }
  }
}

TEST(FilterItineraryTest, Examples) {
  const std::vector<NodeDescriptor> mixed = {{1, Algorithm::kQLearning},
                                             {2, Algorithm::kSarsa},
                                             {3, Algorithm::kQLearning},
                                             {4, Algorithm::kSarsa},
                                             {5, Algorithm::kQLearning}};
  EXPECT_EQ(filter_itinerary(mixed, Algorithm::kQLearning), (std::vector<NodeId>{1, 3, 5}));
  EXPECT_EQ(filter_itinerary(mixed, std::nullopt), (std::vector<NodeId>{1, 2, 3, 4, 5}));
  const std::vector<NodeDescriptor> sarsa = {{1, Algorithm::kSarsa}, {2, Algorithm::kSarsa}};
  try {
    filter_itinerary(sarsa, Algorithm::kQLearning);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyItinerary);
    EXPECT_NE(std::string(e.what()).find("empty itinerary"), std::string::npos);
  }
}

TEST(FederationConfigTest, Validation) {
  FederationConfig c;
  c.itinerary = {1, 2};
  EXPECT_NO_THROW(c.validate());
  c.respite_m = 0;
  EXPECT_THROW(c.validate(), Error);
  c.respite_m = 10;
  c.itinerary = {1, 1};
  EXPECT_THROW(c.validate(), Error);
}

TEST(AlgorithmTest, Parsing) {
  EXPECT_EQ(parse_algorithm("q"), Algorithm::kQLearning);
  EXPECT_EQ(parse_algorithm("sarsa"), Algorithm::kSarsa);
  EXPECT_THROW(parse_algorithm("dqn"), Error);
}
