#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

#include "dfrl/arena.hpp"
#include "dfrl/federation.hpp"
#include "dfrl/learning.hpp"
#include "dfrl/node_types.hpp"
#include "dfrl/rng.hpp"

namespace dfrl {

/// One robot: arena, learner and the Q-table it owns.
///
/// The table is guarded by a single mutex. One learner iteration and one
/// agent visit are each a whole transaction, so neither ever observes the
/// other half-applied. Metrics are sampled lazily: the sample for iteration
/// i is taken just before iteration i+1 runs (or on flush), which makes a
/// federation round that lands on a boundary visible in that sample.
class Node {
 public:
  explicit Node(NodeConfig cfg);

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  const NodeConfig& config() const noexcept { return cfg_; }
  const GridArena& arena() const noexcept { return arena_; }
  NodeId id() const noexcept { return cfg_.node_id; }

  /// Runs up to k iterations, stopping at iterations_total. Returns the
  /// number actually run.
  std::uint64_t advance(std::uint64_t k);
  bool finished() const;

  /// Applies the agent's visit to the local table and returns the agent.
  MobileAgent visit(const MobileAgent& agent);
  QTable snapshot() const;
  /// Overwrites the table wholesale (used to roll back an aborted round).
  void install(const QTable& table);

  NodeStatus status() const;
  void flush_sample();
  std::vector<MetricsRecord> drain_records();

 private:
  void step_locked();
  void sample_locked();

  NodeConfig cfg_;
  GridArena arena_;

  mutable std::mutex mu_;
  QTable table_;
  RobotPose pose_;
  Rng rng_;
  ExplorationSchedule exploration_;
  std::optional<ActionId> pending_action_;
  std::uint64_t iteration_ = 0;
  double cumulative_reward_ = 0.0;
  std::uint64_t rounds_applied_ = 0;
  std::uint64_t last_sampled_ = 0;
  std::vector<MetricsRecord> records_;
};

/// Federation peer plus the lockstep controls the experiment driver needs.
class ControlledNode : public FederationPeer {
 public:
  virtual Algorithm algorithm() const = 0;
  virtual void advance(std::uint64_t k) = 0;
  virtual NodeStatus status() = 0;
  virtual void flush() = 0;
  virtual std::vector<MetricsRecord> drain() = 0;
};

class InProcessPeer final : public ControlledNode {
 public:
  explicit InProcessPeer(Node& node) : node_(node) {}

  NodeId id() const override { return node_.id(); }
  Algorithm algorithm() const override { return node_.config().algorithm; }
  MobileAgent visit(const MobileAgent& agent) override { return node_.visit(agent); }
  QTable snapshot() override { return node_.snapshot(); }
  void install(const QTable& table) override { node_.install(table); }
  void advance(std::uint64_t k) override { node_.advance(k); }
  NodeStatus status() override { return node_.status(); }
  void flush() override { node_.flush_sample(); }
  std::vector<MetricsRecord> drain() override { return node_.drain_records(); }

 private:
  Node& node_;
};

}  // namespace dfrl
