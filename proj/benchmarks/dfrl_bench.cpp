#include <benchmark/benchmark.h>

#include "dfrl/aggregation.hpp"
#include "dfrl/arena.hpp"
#include "dfrl/exact_mdp.hpp"
#include "dfrl/learning.hpp"
#include "dfrl/rng.hpp"
#include "dfrl/wire.hpp"

using namespace dfrl;

namespace {

QTable random_table(std::size_t states, std::size_t actions, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(states * actions);
  for (double& x : v) x = rng.uniform01() * 10.0 - 5.0;
  return QTable::from_values(states, actions, std::move(v));
}

void BM_QUpdate(benchmark::State& state) {
  QTable q = random_table(kNumSensorStates, kNumMoves, 1);
  const LearningParams p;
  StateId s = 0;
  for (auto _ : state) {
    q_update(q, {s, 1, 1.0, static_cast<StateId>((s + 3) % kNumSensorStates), std::nullopt}, p);
    s = (s + 1) % kNumSensorStates;
  }
  benchmark::DoNotOptimize(q.values().data());
}
BENCHMARK(BM_QUpdate);

void BM_SelectAction(benchmark::State& state) {
  const QTable q = random_table(kNumSensorStates, kNumMoves, 2);
  Rng rng(3);
  StateId s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_action(q, s, 0.05, rng));
    s = (s + 1) % kNumSensorStates;
  }
}
BENCHMARK(BM_SelectAction);

void BM_ArenaSenseStep(benchmark::State& state) {
  const GridArena arena = GridArena::generate(12, 12, 4, 7);
  RobotPose pose = arena.spawn_pose();
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sense(arena, pose).state_id);
    pose = step(arena, pose, static_cast<Move>(i++ % 3 == 2 ? 1 : 0)).pose;
  }
}
BENCHMARK(BM_ArenaSenseStep);

void BM_Aggregate(benchmark::State& state) {
  const auto method = static_cast<AggregationMethod>(state.range(0));
  const auto states = static_cast<std::size_t>(state.range(1));
  const QTable a = random_table(states, kNumMoves, 4);
  const QTable b = random_table(states, kNumMoves, 5);
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(method, a, 2, b));
  state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_Aggregate)->ArgsProduct({{0, 1, 2}, {8, 4096}});

void BM_WireRoundTrip(benchmark::State& state) {
  MobileAgent agent = make_agent(1, {1, 2, 3, 4, 5}, AggregationMethod::kPairwiseAverage);
  agent = start_round(agent, random_table(static_cast<std::size_t>(state.range(0)), kNumMoves, 6));
  const WireMessage msg{kProtocolVersion, AgentArrive{agent}};
  std::size_t bytes = 0;
  for (auto _ : state) {
    const std::string frame = encode_message(msg);
    bytes += frame.size();
    benchmark::DoNotOptimize(decode_message(frame));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_WireRoundTrip)->Arg(8)->Arg(1024);

void BM_ValueIteration(benchmark::State& state) {
  const GridArena arena = GridArena::generate(12, 12, 4, 9);
  const ExactMdp mdp = ExactMdp::from_arena(arena);
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(mdp, 0.9, 1e-10));
}
BENCHMARK(BM_ValueIteration);

}  // namespace

BENCHMARK_MAIN();
