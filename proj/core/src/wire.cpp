#include "dfrl/wire.hpp"

#include <cmath>
#include <json.hpp>

#include "dfrl/error.hpp"

namespace dfrl {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxNesting = 16;

json table_to_json(const QTable& t) {
  return json{{"actions", t.num_actions()},
              {"states", t.num_states()},
              {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

QTable table_from_json(const json& j) {
  const auto states = j.at("states").get<std::size_t>();
  const auto actions = j.at("actions").get<std::size_t>();
  const json& values = j.at("values");
  if (!values.is_array()) throw Error(ErrorCode::kProtocol, "table values must be an array");
  // Reject before the multiplication can overflow or allocate.
  if (states == 0 || actions == 0 || states > kMaxFrameBody || actions > kMaxFrameBody ||
      states * actions != values.size()) {
    throw Error(ErrorCode::kProtocol, "table dimensions disagree with value count");
  }
  std::vector<double> v;
  v.reserve(values.size());
  for (const json& x : values) {
    if (!x.is_number()) throw Error(ErrorCode::kProtocol, "table value is not a number");
    v.push_back(x.get<double>());
  }
  return QTable::from_values(states, actions, std::move(v));
}

json agent_to_json(const MobileAgent& a) {
  return json{{"agent_id", a.agent_id},
              {"itinerary", a.itinerary},
              {"method", std::string(to_string(a.method))},
              {"payload", a.payload ? table_to_json(*a.payload) : json(nullptr)},
              {"payload_count", a.payload_count},
              {"phase", std::string(to_string(a.phase))},
              {"position", a.position},
              {"round", a.round},
              {"tag", a.algo_tag ? json(std::string(to_string(*a.algo_tag))) : json(nullptr)}};
}

MobileAgent agent_from_json(const json& j) {
  MobileAgent a;
  a.agent_id = j.at("agent_id").get<std::uint64_t>();
  a.itinerary = j.at("itinerary").get<std::vector<NodeId>>();
  a.method = parse_aggregation_method(j.at("method").get<std::string>());
  if (const json& p = j.at("payload"); !p.is_null()) a.payload = table_from_json(p);
  a.payload_count = j.at("payload_count").get<std::uint64_t>();
  const auto phase = j.at("phase").get<std::string>();
  if (phase == "forward") {
    a.phase = Phase::kForward;
  } else if (phase == "backward") {
    a.phase = Phase::kBackward;
  } else {
    throw Error(ErrorCode::kProtocol, "unknown agent phase '" + phase + "'");
  }
  a.position = j.at("position").get<std::size_t>();
  a.round = j.at("round").get<std::uint64_t>();
  if (const json& t = j.at("tag"); !t.is_null()) a.algo_tag = parse_algorithm(t.get<std::string>());
  a.validate();
  return a;
}

json status_to_json(const NodeStatus& s) {
  return json{{"algorithm", std::string(to_string(s.algorithm))},
              {"cumulative_reward", s.cumulative_reward},
              {"finished", s.finished},
              {"iteration", s.iteration},
              {"node_id", s.node_id},
              {"rounds_applied", s.rounds_applied},
              {"sum_q", s.sum_q}};
}

NodeStatus status_from_json(const json& j) {
  NodeStatus s;
  s.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  s.cumulative_reward = j.at("cumulative_reward").get<double>();
  s.finished = j.at("finished").get<bool>();
  s.iteration = j.at("iteration").get<std::uint64_t>();
  s.node_id = j.at("node_id").get<NodeId>();
  s.rounds_applied = j.at("rounds_applied").get<std::uint64_t>();
  s.sum_q = j.at("sum_q").get<double>();
  return s;
}

// Records travel as rows to keep large drains compact.
json records_to_json(const std::vector<MetricsRecord>& records) {
  json rows = json::array();
  for (const auto& r : records) {
    rows.push_back(json::array({r.node_id, r.iteration, r.round, r.sum_q, r.cumulative_reward}));
  }
  return rows;
}

std::vector<MetricsRecord> records_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kProtocol, "records must be an array");
  std::vector<MetricsRecord> out;
  out.reserve(j.size());
  for (const json& row : j) {
    if (!row.is_array() || row.size() != 5 || !row[3].is_number() || !row[4].is_number()) {
      throw Error(ErrorCode::kProtocol, "malformed metrics record");
    }
    out.push_back({row[0].get<NodeId>(), row[1].get<std::uint64_t>(), row[2].get<std::uint64_t>(),
                   row[3].get<double>(), row[4].get<double>()});
  }
  return out;
}

struct BodyToJson {
  json operator()(const AgentArrive& m) const { return {{"agent", agent_to_json(m.agent)}}; }
  json operator()(const AgentAck& m) const {
    return {{"agent", agent_to_json(m.agent)}, {"error", m.error}};
  }
  json operator()(const TableSnapshotReq&) const { return json::object(); }
  json operator()(const TableSnapshot& m) const {
    return {{"install", m.install}, {"table", table_to_json(m.table)}};
  }
  json operator()(const StatusReq& m) const {
    return {{"drain", m.drain},
            {"flush", m.flush},
            {"run_iterations", m.run_iterations},
            {"shutdown", m.shutdown}};
  }
  json operator()(const Status& m) const {
    return {{"error", m.error},
            {"node", status_to_json(m.node)},
            {"records", records_to_json(m.records)}};
  }
};

MessageBody body_from_json(MsgType type, const json& b) {
  if (!b.is_object()) throw Error(ErrorCode::kProtocol, "body must be an object");
  switch (type) {
    case MsgType::kAgentArrive:
      return AgentArrive{agent_from_json(b.at("agent"))};
    case MsgType::kAgentAck:
      return AgentAck{agent_from_json(b.at("agent")), b.at("error").get<std::string>()};
    case MsgType::kTableSnapshotReq:
      return TableSnapshotReq{};
    case MsgType::kTableSnapshot:
      return TableSnapshot{table_from_json(b.at("table")), b.at("install").get<bool>()};
    case MsgType::kStatusReq:
      return StatusReq{b.at("run_iterations").get<std::uint64_t>(), b.at("flush").get<bool>(),
                       b.at("drain").get<bool>(), b.at("shutdown").get<bool>()};
    case MsgType::kStatus:
      return Status{status_from_json(b.at("node")), b.at("error").get<std::string>(),
                    records_from_json(b.at("records"))};
  }
  throw Error(ErrorCode::kProtocol, "unknown message type");
}

// Bracket depth outside string literals; bounds the parser's work on hostile input.
std::size_t max_nesting(std::string_view text) {
  std::size_t depth = 0;
  std::size_t deepest = 0;
  bool in_string = false;
  bool escaped = false;
  for (char c : text) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      deepest = std::max(deepest, ++depth);
    } else if ((c == ']' || c == '}') && depth > 0) {
      --depth;
    }
  }
  return deepest;
}

DecodeResult error_result(std::string what, std::size_t offset) {
  DecodeResult r;
  r.kind = DecodeResult::Kind::kError;
  r.error = std::move(what);
  r.error_offset = offset;
  return r;
}

}  // namespace

std::string_view to_string(MsgType type) {
  switch (type) {
    case MsgType::kAgentArrive: return "AGENT_ARRIVE";
    case MsgType::kAgentAck: return "AGENT_ACK";
    case MsgType::kTableSnapshotReq: return "TABLE_SNAPSHOT_REQ";
    case MsgType::kTableSnapshot: return "TABLE_SNAPSHOT";
    case MsgType::kStatusReq: return "STATUS_REQ";
    case MsgType::kStatus: return "STATUS";
  }
  return "?";
}

std::optional<MsgType> parse_msg_type(std::string_view text) {
  for (int i = 0; i <= static_cast<int>(MsgType::kStatus); ++i) {
    const auto t = static_cast<MsgType>(i);
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string encode_body(const WireMessage& message) {
  const json doc{{"body", std::visit(BodyToJson{}, message.body)},
                 {"type", std::string(to_string(message.type()))},
                 {"v", message.protocol_version}};
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string encode_message(const WireMessage& message) {
  std::string body = encode_body(message);
  if (body.size() > kMaxFrameBody) {
    throw Error(ErrorCode::kOversize,
                "message body of " + std::to_string(body.size()) + " bytes exceeds 64 MiB");
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string frame;
  frame.reserve(kFrameHeaderBytes + body.size());
  frame.push_back(static_cast<char>((n >> 24) & 0xff));
  frame.push_back(static_cast<char>((n >> 16) & 0xff));
  frame.push_back(static_cast<char>((n >> 8) & 0xff));
  frame.push_back(static_cast<char>(n & 0xff));
  frame += body;
  return frame;
}

std::uint32_t read_frame_length(std::string_view bytes) {
  const auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])); };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

DecodeResult decode_message(std::string_view bytes) {
  if (bytes.size() < kFrameHeaderBytes) return {};
  const std::uint32_t length = read_frame_length(bytes);
  if (length > kMaxFrameBody) {
    return error_result("oversize: declared body of " + std::to_string(length) + " bytes", 0);
  }
  if (bytes.size() - kFrameHeaderBytes < length) return {};

  const std::string_view body = bytes.substr(kFrameHeaderBytes, length);
  if (max_nesting(body) > kMaxNesting) {
    return error_result("parse error: nesting too deep", kFrameHeaderBytes);
  }

  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
    return error_result("parse error at byte " + std::to_string(kFrameHeaderBytes + at) + ": " +
                            e.what(),
                        kFrameHeaderBytes + at);
  } catch (const std::exception& e) {
    return error_result(std::string("parse error: ") + e.what(), kFrameHeaderBytes);
  }

  try {
    if (!doc.is_object()) throw Error(ErrorCode::kProtocol, "frame body is not an object");
    const auto type = parse_msg_type(doc.at("type").get<std::string>());
    if (!type) throw Error(ErrorCode::kProtocol, "unknown msg_type");
    const int version = doc.at("v").get<int>();
    if (version != kProtocolVersion) {
      DecodeResult r = error_result(
          "protocol error: version " + std::to_string(version) + " not supported",
          kFrameHeaderBytes);
      r.rejected_version = version;
      return r;
    }
    DecodeResult r;
    r.kind = DecodeResult::Kind::kMessage;
    r.message = WireMessage{version, body_from_json(*type, doc.at("body"))};
    r.consumed = kFrameHeaderBytes + length;
    return r;
  } catch (const std::exception& e) {
    return error_result(std::string("protocol error: ") + e.what(), kFrameHeaderBytes);
  }
}

}  // namespace dfrl
