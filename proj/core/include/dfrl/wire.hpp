#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dfrl/federation.hpp"
#include "dfrl/node_types.hpp"
#include "dfrl/q_table.hpp"

namespace dfrl {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBody = 64u * 1024u * 1024u;
inline constexpr std::size_t kFrameHeaderBytes = 4;

enum class MsgType : std::uint8_t {
  kAgentArrive,
  kAgentAck,
  kTableSnapshotReq,
  kTableSnapshot,
  kStatusReq,
  kStatus,
};

std::string_view to_string(MsgType type);
std::optional<MsgType> parse_msg_type(std::string_view text);

struct AgentArrive {
  MobileAgent agent;
  bool operator==(const AgentArrive&) const = default;
};

/// `error` is empty when the visit succeeded.
struct AgentAck {
  MobileAgent agent;
  std::string error;
  bool operator==(const AgentAck&) const = default;
};

struct TableSnapshotReq {
  bool operator==(const TableSnapshotReq&) const = default;
};

/// Node -> driver: the current table. Driver -> node with install=true:
/// overwrite the node's table (round rollback); the node answers STATUS.
struct TableSnapshot {
  QTable table{1, 1};
  bool install = false;
  bool operator==(const TableSnapshot&) const = default;
};

/// Plain status probe. The optional fields turn it into a lockstep barrier:
/// run_iterations runs that many learner iterations before answering,
/// flush takes the pending metrics sample, drain ships buffered records in
/// the reply, shutdown stops the daemon after replying.
struct StatusReq {
  std::uint64_t run_iterations = 0;
  bool flush = false;
  bool drain = false;
  bool shutdown = false;
  bool operator==(const StatusReq&) const = default;
};

struct Status {
  NodeStatus node;
  std::string error;
  std::vector<MetricsRecord> records;
  bool operator==(const Status&) const = default;
};

using MessageBody =
    std::variant<AgentArrive, AgentAck, TableSnapshotReq, TableSnapshot, StatusReq, Status>;

struct WireMessage {
  int protocol_version = kProtocolVersion;
  MessageBody body;

  MsgType type() const noexcept { return static_cast<MsgType>(body.index()); }
  bool operator==(const WireMessage&) const = default;
};

/// Canonical JSON text of the message (sorted keys, round-trip floats).
std::string encode_body(const WireMessage& message);

/// 4-byte big-endian body length followed by the body. Throws kOversize
/// when the body exceeds kMaxFrameBody.
std::string encode_message(const WireMessage& message);

struct DecodeResult {
  enum class Kind : std::uint8_t { kMessage, kIncomplete, kError };

  Kind kind = Kind::kIncomplete;
  std::optional<WireMessage> message;
  /// Bytes consumed by a complete frame (header + body).
  std::size_t consumed = 0;
  /// Set for kError: "oversize", "parse error", "protocol error".
  std::string error;
  /// Byte offset of the problem within the input, counting the header.
  std::size_t error_offset = 0;
  /// Protocol version of an otherwise well-formed body that was rejected.
  std::optional<int> rejected_version;
};

/// Decodes the first frame in `bytes`. Never throws and never allocates
/// more than the bytes actually present.
DecodeResult decode_message(std::string_view bytes);

/// Reads the big-endian length prefix; bytes must hold at least 4 bytes.
std::uint32_t read_frame_length(std::string_view bytes);

}  // namespace dfrl
