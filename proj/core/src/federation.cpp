#include "dfrl/federation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dfrl/error.hpp"
#include "dfrl/float_format.hpp"
#include "dfrl/learning.hpp"

namespace dfrl {

std::string_view to_string(Algorithm algo) {
  return algo == Algorithm::kQLearning ? "qlearning" : "sarsa";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "q" || text == "qlearning") return Algorithm::kQLearning;
  if (text == "s" || text == "sarsa") return Algorithm::kSarsa;
  throw Error(ErrorCode::kConfig,
              "unknown algorithm '" + std::string(text) + "' (expected q or sarsa)");
}

std::string_view to_string(Phase phase) {
  return phase == Phase::kForward ? "forward" : "backward";
}

NodeId MobileAgent::current_node() const {
  if (position >= itinerary.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "agent position " + std::to_string(position) + " outside itinerary of length " +
                    std::to_string(itinerary.size()));
  }
  return itinerary[position];
}

void MobileAgent::validate() const {
  const auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, "invalid agent: " + why);
  };
  if (itinerary.empty()) fail("empty itinerary");
  if (position >= itinerary.size()) fail("position out of range");
  std::set<NodeId> unique(itinerary.begin(), itinerary.end());
  if (unique.size() != itinerary.size()) fail("duplicate node in itinerary");
  if (payload.has_value() != (payload_count > 0)) fail("payload and payload_count disagree");
  if (phase == Phase::kBackward && !payload) fail("backward phase without payload");
  if (phase == Phase::kBackward && position + 1 >= itinerary.size()) {
    fail("backward phase at final stop");
  }
}

MobileAgent make_agent(std::uint64_t agent_id, std::vector<NodeId> itinerary,
                       AggregationMethod method, std::optional<Algorithm> tag) {
  MobileAgent agent;
  agent.agent_id = agent_id;
  agent.itinerary = std::move(itinerary);
  agent.method = method;
  agent.algo_tag = tag;
  agent.validate();
  return agent;
}

void FederationConfig::validate() const {
  if (respite_m == 0) throw Error(ErrorCode::kConfig, "respite must be >= 1");
  if (itinerary.empty()) throw Error(ErrorCode::kConfig, "itinerary is empty");
  std::set<NodeId> unique(itinerary.begin(), itinerary.end());
  if (unique.size() != itinerary.size()) {
    throw Error(ErrorCode::kConfig, "itinerary has duplicate node ids");
  }
}

namespace {

void park(MobileAgent& agent) {
  agent.phase = Phase::kForward;
  agent.position = 0;
  agent.payload.reset();
  agent.payload_count = 0;
}

void require_payload_shape(const MobileAgent& agent, const QTable& table) {
  if (!agent.payload->same_shape(table)) {
    throw Error(ErrorCode::kDimensionMismatch, "agent payload and node table differ in shape");
  }
}

}  // namespace

MobileAgent start_round(MobileAgent agent, const QTable& initiator_table) {
  if (agent.round_in_progress() || agent.position != 0 || agent.phase != Phase::kForward) {
    throw Error(ErrorCode::kWrongPhase, "round already in progress");
  }
  agent.payload = initiator_table;
  agent.payload_count = 1;
  if (agent.itinerary.size() == 1) {
    // Degenerate itinerary: the initiator's table is already the aggregate.
    ++agent.round;
    park(agent);
  } else {
    agent.position = 1;
  }
  return agent;
}

MobileAgent forward_visit(MobileAgent agent, const QTable& local_table) {
  if (agent.phase != Phase::kForward || !agent.round_in_progress()) {
    throw Error(ErrorCode::kWrongPhase, "forward_visit outside forward pass");
  }
  if (agent.position == 0 || agent.at_last_stop()) {
    throw Error(ErrorCode::kWrongPhase, "forward_visit at an itinerary end");
  }
  require_payload_shape(agent, local_table);
  agent.payload = aggregate(agent.method, *agent.payload, agent.payload_count, local_table);
  ++agent.payload_count;
  ++agent.position;
  return agent;
}

std::pair<MobileAgent, QTable> turn_around(MobileAgent agent, const QTable& last_node_table) {
  if (agent.phase != Phase::kForward || !agent.round_in_progress() || !agent.at_last_stop() ||
      agent.itinerary.size() < 2) {
    throw Error(ErrorCode::kWrongPhase, "turn_around only at the final itinerary stop");
  }
  require_payload_shape(agent, last_node_table);
  agent.payload = aggregate(agent.method, *agent.payload, agent.payload_count, last_node_table);
  ++agent.payload_count;
  agent.phase = Phase::kBackward;
  agent.position = agent.itinerary.size() - 2;
  QTable replaced = *agent.payload;
  return {std::move(agent), std::move(replaced)};
}

std::pair<MobileAgent, QTable> backward_visit(MobileAgent agent, const QTable& local_table) {
  if (agent.phase != Phase::kBackward || !agent.round_in_progress()) {
    throw Error(ErrorCode::kWrongPhase, "backward_visit outside backward pass");
  }
  require_payload_shape(agent, local_table);
  QTable replaced = *agent.payload;
  if (agent.position == 0) {
    ++agent.round;
    park(agent);
  } else {
    --agent.position;
  }
  return {std::move(agent), std::move(replaced)};
}

VisitOutcome apply_visit(MobileAgent agent, NodeId here, Algorithm node_algorithm,
                         QTable& table) {
  agent.validate();
  if (agent.current_node() != here) {
    throw Error(ErrorCode::kNodeNotInItinerary,
                "agent expects node " + std::to_string(agent.current_node()) + " but arrived at " +
                    std::to_string(here));
  }
  if (agent.algo_tag && *agent.algo_tag != node_algorithm) {
    throw Error(ErrorCode::kTagMismatch,
                "agent tagged " + std::string(to_string(*agent.algo_tag)) + " visited a " +
                    std::string(to_string(node_algorithm)) + " node");
  }

  if (!agent.round_in_progress()) {
    // A one-stop round writes the (identical) aggregate straight back.
    const bool single = agent.itinerary.size() == 1;
    return {start_round(std::move(agent), table), single};
  }
  if (agent.phase == Phase::kForward && !agent.at_last_stop()) {
    return {forward_visit(std::move(agent), table), false};
  }
  auto [next, replaced] = agent.phase == Phase::kForward
                              ? turn_around(std::move(agent), table)
                              : backward_visit(std::move(agent), table);
  table = std::move(replaced);
  return {std::move(next), true};
}

std::vector<NodeId> filter_itinerary(std::span<const NodeDescriptor> nodes,
                                     std::optional<Algorithm> tag) {
  std::vector<NodeId> out;
  for (const auto& n : nodes) {
    if (!tag || n.algorithm == *tag) out.push_back(n.id);
  }
  if (out.empty()) {
    throw Error(ErrorCode::kEmptyItinerary,
                "empty itinerary: no node runs " +
                    std::string(tag ? to_string(*tag) : std::string_view("any algorithm")));
  }
  return out;
}

RoundReport run_round(std::span<FederationPeer* const> peers, MobileAgent& agent) {
  const auto started = std::chrono::steady_clock::now();
  RoundReport report;
  report.round = agent.round + 1;
  report.method = agent.method;
  report.algo_tag = agent.algo_tag;

  const auto peer_for = [&](NodeId id) -> FederationPeer& {
    for (FederationPeer* p : peers) {
      if (p->id() == id) return *p;
    }
    throw Error(ErrorCode::kNodeNotInItinerary,
                "no peer for itinerary node " + std::to_string(id));
  };

  std::vector<QTable> pre;
  std::vector<std::uint8_t> written(agent.itinerary.size(), 0);
  try {
    agent.validate();
    if (agent.round_in_progress()) {
      throw Error(ErrorCode::kWrongPhase, "agent is mid-round");
    }
    for (NodeId id : agent.itinerary) pre.push_back(peer_for(id).snapshot());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      report.nodes.push_back({agent.itinerary[i], sum_q(pre[i]), 0.0});
    }

    const std::uint64_t round_before = agent.round;
    const std::size_t max_hops = 2 * agent.itinerary.size();
    for (std::size_t hop = 0; hop < max_hops && agent.round == round_before; ++hop) {
      const std::size_t at = agent.position;
      const bool writes = agent.round_in_progress() &&
                          (agent.phase == Phase::kBackward || agent.at_last_stop());
      MobileAgent moved = peer_for(agent.current_node()).visit(agent);
      if (writes || agent.itinerary.size() == 1) written[at] = 1;
      agent = std::move(moved);
    }
    if (agent.round == round_before) {
      throw Error(ErrorCode::kProtocol, "agent did not complete its round");
    }

    bool identical = true;
    std::optional<QTable> first;
    for (std::size_t i = 0; i < agent.itinerary.size(); ++i) {
      QTable post = peer_for(agent.itinerary[i]).snapshot();
      report.nodes[i].post_sum_q = sum_q(post);
      if (!first) {
        first = std::move(post);
      } else if (!first->bit_equal(post)) {
        identical = false;
      }
    }
    report.identical = identical;
  } catch (const std::exception& e) {
    report.aborted = true;
    report.error = e.what();
    for (std::size_t i = 0; i < written.size() && i < pre.size(); ++i) {
      if (!written[i]) continue;
      try {
        peer_for(agent.itinerary[i]).install(pre[i]);
      } catch (const std::exception&) {
        // Unreachable peers keep whatever they hold; the report says aborted.
      }
    }
    for (std::size_t i = 0; i < report.nodes.size(); ++i) {
      report.nodes[i].post_sum_q = report.nodes[i].pre_sum_q;
    }
    park(agent);
  }
  report.duration = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - started);
  return report;
}

std::string format_round_report(const RoundReport& report) {
  std::ostringstream out;
  out << "event=round round=" << report.round << " method=" << to_string(report.method)
      << " tag=" << (report.algo_tag ? to_string(*report.algo_tag) : "any")
      << " status=" << (report.aborted ? "aborted" : "ok")
      << " identical=" << (report.identical ? "true" : "false")
      << " duration_us=" << report.duration.count();
  for (const auto& n : report.nodes) {
    out << " node" << n.node << "_pre_sum_q=" << format_double(n.pre_sum_q) << " node" << n.node
        << "_post_sum_q=" << format_double(n.post_sum_q);
  }
  if (!report.error.empty()) out << " error=\"" << report.error << "\"";
  return out.str();
}

}  // namespace dfrl
