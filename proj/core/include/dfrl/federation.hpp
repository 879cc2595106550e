#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dfrl/aggregation.hpp"
#include "dfrl/q_table.hpp"

namespace dfrl {

using NodeId = std::uint32_t;

enum class Algorithm : std::uint8_t { kQLearning, kSarsa };

/// "qlearning" | "sarsa".
std::string_view to_string(Algorithm algo);
/// Accepts "q", "qlearning", "s", "sarsa".
Algorithm parse_algorithm(std::string_view text);

enum class Phase : std::uint8_t { kForward, kBackward };

std::string_view to_string(Phase phase);

/// Migrating aggregation state. Between rounds the agent is parked at
/// position 0 in the forward phase with no payload; the first visit of a
/// round loads the payload from the initiator's table.
struct MobileAgent {
  std::uint64_t agent_id = 0;
  std::vector<NodeId> itinerary;
  std::size_t position = 0;
  Phase phase = Phase::kForward;
  std::optional<QTable> payload;
  std::uint64_t payload_count = 0;
  AggregationMethod method = AggregationMethod::kPairwiseAverage;
  std::optional<Algorithm> algo_tag;
  std::uint64_t round = 0;

  bool round_in_progress() const noexcept { return payload.has_value(); }
  bool at_last_stop() const noexcept { return position + 1 == itinerary.size(); }
  NodeId current_node() const;

  /// Throws kInvalidArgument when the structural invariants do not hold.
  void validate() const;

  bool operator==(const MobileAgent&) const = default;
};

MobileAgent make_agent(std::uint64_t agent_id, std::vector<NodeId> itinerary,
                       AggregationMethod method, std::optional<Algorithm> tag = std::nullopt);

struct FederationConfig {
  std::uint64_t respite_m = 500;
  std::optional<std::uint64_t> rounds_max;
  /// Stop launching rounds once the initiator's post-round sum_q moves by
  /// at most this fraction between consecutive rounds.
  std::optional<double> saturation_tolerance;
  AggregationMethod method = AggregationMethod::kPairwiseAverage;
  std::vector<NodeId> itinerary;

  void validate() const;
};

/// Loads the payload from the initiator (itinerary[0]) and moves on.
MobileAgent start_round(MobileAgent agent, const QTable& initiator_table);

/// Folds an intermediate node's table into the payload. The local table is
/// only read.
MobileAgent forward_visit(MobileAgent agent, const QTable& local_table);

/// Folds the final node's table, hands the aggregate to that node, and
/// reverses direction.
std::pair<MobileAgent, QTable> turn_around(MobileAgent agent, const QTable& last_node_table);

/// Replaces the local table with the payload. Visiting the initiator closes
/// the round.
std::pair<MobileAgent, QTable> backward_visit(MobileAgent agent, const QTable& local_table);

struct VisitOutcome {
  MobileAgent agent;
  bool table_replaced = false;
};

/// Node-side dispatcher: picks start/forward/turn-around/backward for the
/// agent's state and applies it to `table` in place. Rejects agents whose
/// current stop is not `here` or whose tag does not match `node_algorithm`.
VisitOutcome apply_visit(MobileAgent agent, NodeId here, Algorithm node_algorithm,
                         QTable& table);

struct NodeDescriptor {
  NodeId id = 0;
  Algorithm algorithm = Algorithm::kQLearning;
};

/// Order-preserving subsequence of nodes running `tag`; every node when
/// untagged. Throws kEmptyItinerary when nothing matches.
std::vector<NodeId> filter_itinerary(std::span<const NodeDescriptor> nodes,
                                     std::optional<Algorithm> tag);

/// One reachable node as seen by the federation driver.
class FederationPeer {
 public:
  virtual ~FederationPeer() = default;

  virtual NodeId id() const = 0;
  /// Hands the agent to the node and returns it after the visit. Throws
  /// kMigration when the node cannot be reached.
  virtual MobileAgent visit(const MobileAgent& agent) = 0;
  virtual QTable snapshot() = 0;
  virtual void install(const QTable& table) = 0;
};

struct NodeRoundStat {
  NodeId node = 0;
  double pre_sum_q = 0.0;
  double post_sum_q = 0.0;
};

struct RoundReport {
  std::uint64_t round = 0;
  AggregationMethod method = AggregationMethod::kPairwiseAverage;
  std::optional<Algorithm> algo_tag;
  std::vector<NodeRoundStat> nodes;
  std::chrono::microseconds duration{0};
  bool aborted = false;
  /// All itinerary tables bit-identical after the round.
  bool identical = false;
  std::string error;
};

/// Drives one full forward/backward pass of `agent` over its itinerary.
/// On any failure the nodes already overwritten get their pre-round tables
/// back, the agent is parked for a retry, and the report is marked aborted.
RoundReport run_round(std::span<FederationPeer* const> peers, MobileAgent& agent);

/// Single structured log line: key=value pairs.
std::string format_round_report(const RoundReport& report);

}  // namespace dfrl
