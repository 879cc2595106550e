#pragma once

#include <cstdint>
#include <string>

#include "dfrl/arena.hpp"
#include "dfrl/federation.hpp"
#include "dfrl/learning.hpp"

namespace dfrl {

struct NodeConfig {
  NodeId node_id = 1;
  std::string listen_address = "127.0.0.1:0";
  Algorithm algorithm = Algorithm::kQLearning;
  ArenaShape arena;
  /// Root of the node's arena layout and exploration stream.
  std::uint64_t seed = 0;
  LearningParams params;
  std::uint64_t iterations_total = 25'000;
  std::uint64_t metrics_every = 100;
  /// Wall-clock delay per iteration; 0 runs flat out.
  std::uint32_t pace_ms = 0;

  std::uint64_t arena_seed() const { return derive_seed(seed, 1); }
  std::uint64_t learner_seed() const { return derive_seed(seed, 2); }

  void validate() const;
};

struct MetricsRecord {
  NodeId node_id = 0;
  std::uint64_t iteration = 0;
  std::uint64_t round = 0;
  double sum_q = 0.0;
  double cumulative_reward = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

struct NodeStatus {
  NodeId node_id = 0;
  Algorithm algorithm = Algorithm::kQLearning;
  std::uint64_t iteration = 0;
  double sum_q = 0.0;
  double cumulative_reward = 0.0;
  std::uint64_t rounds_applied = 0;
  bool finished = false;

  bool operator==(const NodeStatus&) const = default;
};

}  // namespace dfrl
