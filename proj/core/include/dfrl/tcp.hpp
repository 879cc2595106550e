#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "dfrl/node.hpp"
#include "dfrl/wire.hpp"

namespace dfrl {

inline constexpr std::chrono::milliseconds kDefaultMigrationTimeout{10'000};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  bool operator==(const Endpoint&) const = default;
};

/// "host:port"; throws kConfig.
Endpoint parse_endpoint(std::string_view text);

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close() noexcept;

 private:
  int fd_ = -1;
};

/// Connects with a deadline; throws kMigration on failure.
Socket connect_to(const Endpoint& ep, std::chrono::milliseconds timeout);

void send_message(Socket& sock, const WireMessage& message);

/// Reads exactly one frame. Throws kMigration on timeout or a closed peer,
/// kProtocol on a frame that does not decode.
WireMessage receive_message(Socket& sock, std::chrono::milliseconds timeout);

/// One request/response exchange on a fresh connection.
WireMessage exchange(const Endpoint& ep, const WireMessage& request,
                     std::chrono::milliseconds timeout = kDefaultMigrationTimeout);

/// Ships the agent to the node at `target` and returns it after the visit.
/// Throws kMigration when the node is unreachable, times out or refuses.
MobileAgent migrate(const MobileAgent& agent, const Endpoint& target,
                    std::chrono::milliseconds timeout = kDefaultMigrationTimeout);

/// Serves the wire protocol for one node. Each connection is handled on
/// its own thread; table access is serialized by the node itself.
class NodeServer {
 public:
  NodeServer(Node& node, const Endpoint& listen);
  ~NodeServer();

  NodeServer(const NodeServer&) = delete;
  NodeServer& operator=(const NodeServer&) = delete;

  /// The bound port (resolves port 0).
  std::uint16_t port() const noexcept { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }

  /// Blocks until a shutdown request arrives or stop() is called.
  void wait();
  void stop();
  bool stopping() const noexcept { return stop_.load(); }

  /// Handles one decoded request; exposed for tests.
  WireMessage handle(const WireMessage& request);

 private:
  void accept_loop();
  void serve_connection(Socket sock);

  Node& node_;
  std::string host_;
  std::uint16_t port_ = 0;
  Socket listener_;
  std::atomic<bool> stop_{false};
  std::mutex threads_mu_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::list<Worker> workers_;
  std::thread acceptor_;
  std::mutex wait_mu_;
};

/// Federation and lockstep control of a remote node.
class TcpPeer final : public ControlledNode {
 public:
  TcpPeer(NodeId id, Algorithm algorithm, Endpoint endpoint,
          std::chrono::milliseconds timeout = kDefaultMigrationTimeout)
      : id_(id), algorithm_(algorithm), endpoint_(std::move(endpoint)), timeout_(timeout) {}

  NodeId id() const override { return id_; }
  Algorithm algorithm() const override { return algorithm_; }
  const Endpoint& endpoint() const noexcept { return endpoint_; }

  MobileAgent visit(const MobileAgent& agent) override;
  QTable snapshot() override;
  void install(const QTable& table) override;
  void advance(std::uint64_t k) override;
  NodeStatus status() override;
  void flush() override;
  std::vector<MetricsRecord> drain() override;
  void shutdown();

 private:
  Status control(const StatusReq& req, std::chrono::milliseconds timeout);

  NodeId id_;
  Algorithm algorithm_;
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

}  // namespace dfrl
