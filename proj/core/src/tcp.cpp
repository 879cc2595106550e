#include "dfrl/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>

#include "dfrl/error.hpp"

namespace dfrl {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

std::string errno_text() { return std::strerror(errno); }

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(left);
}

// Waits for `events`; false on timeout.
bool wait_for(int fd, short events, Clock::time_point deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) fail(ErrorCode::kMigration, "poll failed: " + errno_text());
  }
}

void read_exact(int fd, char* out, std::size_t n, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    if (!wait_for(fd, POLLIN, deadline)) fail(ErrorCode::kMigration, "receive timed out");
    const ssize_t rc = ::recv(fd, out + got, n - got, 0);
    if (rc == 0) fail(ErrorCode::kMigration, "peer closed the connection");
    if (rc < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorCode::kMigration, "recv failed: " + errno_text());
    }
    got += static_cast<std::size_t>(rc);
  }
}

void write_all(int fd, std::string_view data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t rc = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::kMigration, "send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(rc);
  }
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    fail(passive ? ErrorCode::kIo : ErrorCode::kMigration,
         "cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
  }
  return res;
}

WireMessage status_error(const NodeStatus& node, std::string error) {
  return WireMessage{kProtocolVersion, Status{node, std::move(error), {}}};
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error(ErrorCode::kConfig, "expected host:port, got '" + std::string(text) + "'");
  }
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    const std::string digits(text.substr(colon + 1));
    port = std::stoul(digits, &used);
    if (used != digits.size() || port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "bad port in '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket connect_to(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> res(resolve(ep, false), ::freeaddrinfo);
  Socket sock(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!sock.valid()) fail(ErrorCode::kMigration, "socket failed: " + errno_text());

  const int flags = ::fcntl(sock.fd(), F_GETFL, 0);
  ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
  if (::connect(sock.fd(), res->ai_addr, res->ai_addrlen) != 0) {
    if (errno != EINPROGRESS) {
      fail(ErrorCode::kMigration, "connect to " + ep.to_string() + " failed: " + errno_text());
    }
    if (!wait_for(sock.fd(), POLLOUT, deadline)) {
      fail(ErrorCode::kMigration, "connect to " + ep.to_string() + " timed out");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      fail(ErrorCode::kMigration,
           "connect to " + ep.to_string() + " failed: " + std::strerror(err));
    }
  }
  ::fcntl(sock.fd(), F_SETFL, flags);
  const int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return sock;
}

void send_message(Socket& sock, const WireMessage& message) {
  write_all(sock.fd(), encode_message(message));
}

WireMessage receive_message(Socket& sock, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  std::string frame(kFrameHeaderBytes, '\0');
  read_exact(sock.fd(), frame.data(), kFrameHeaderBytes, deadline);
  const std::uint32_t length = read_frame_length(frame);
  if (length > kMaxFrameBody) {
    fail(ErrorCode::kOversize, "incoming frame of " + std::to_string(length) + " bytes");
  }
  frame.resize(kFrameHeaderBytes + length);
  read_exact(sock.fd(), frame.data() + kFrameHeaderBytes, length, deadline);
  DecodeResult r = decode_message(frame);
  if (r.kind != DecodeResult::Kind::kMessage) fail(ErrorCode::kProtocol, r.error);
  return std::move(*r.message);
}

WireMessage exchange(const Endpoint& ep, const WireMessage& request,
                     std::chrono::milliseconds timeout) {
  Socket sock = connect_to(ep, timeout);
  send_message(sock, request);
  return receive_message(sock, timeout);
}

MobileAgent migrate(const MobileAgent& agent, const Endpoint& target,
                    std::chrono::milliseconds timeout) {
  WireMessage reply;
  try {
    reply = exchange(target, WireMessage{kProtocolVersion, AgentArrive{agent}}, timeout);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMigration,
                "migration to " + target.to_string() + " failed: " + e.what());
  }
  if (const auto* ack = std::get_if<AgentAck>(&reply.body)) {
    if (!ack->error.empty()) {
      throw Error(ErrorCode::kMigration,
                  "node " + target.to_string() + " refused the agent: " + ack->error);
    }
    return ack->agent;
  }
  if (const auto* st = std::get_if<Status>(&reply.body); st && !st->error.empty()) {
    throw Error(ErrorCode::kMigration,
                "node " + target.to_string() + " refused the agent: " + st->error);
  }
  throw Error(ErrorCode::kMigration, "unexpected reply " + std::string(to_string(reply.type())) +
                                         " from " + target.to_string());
}

// ---------------------------------------------------------------------------
// NodeServer

NodeServer::NodeServer(Node& node, const Endpoint& listen) : node_(node), host_(listen.host) {
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> res(resolve(listen, true), ::freeaddrinfo);
  listener_ = Socket(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!listener_.valid()) fail(ErrorCode::kIo, "socket failed: " + errno_text());
  const int one = 1;
  ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listener_.fd(), res->ai_addr, res->ai_addrlen) != 0) {
    fail(ErrorCode::kIo, "cannot bind " + listen.to_string() + ": " + errno_text());
  }
  if (::listen(listener_.fd(), 64) != 0) fail(ErrorCode::kIo, "listen failed: " + errno_text());

  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  if (host_.empty()) host_ = "0.0.0.0";

  acceptor_ = std::thread([this] { accept_loop(); });
}

NodeServer::~NodeServer() {
  stop();
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(threads_mu_);
  for (auto& w : workers_) {
    if (w.thread.joinable()) w.thread.join();
  }
}

void NodeServer::stop() { stop_.store(true); }

void NodeServer::wait() {
  std::lock_guard lock(wait_mu_);
  while (!stop_.load()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
}

void NodeServer::accept_loop() {
  while (!stop_.load()) {
    pollfd p{listener_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc <= 0) continue;
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(threads_mu_);
    for (auto it = workers_.begin(); it != workers_.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = workers_.erase(it);
      } else {
        ++it;
      }
    }
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({std::thread([this, fd, done] {
                          serve_connection(Socket(fd));
                          done->store(true);
                        }),
                        done});
  }
}

void NodeServer::serve_connection(Socket sock) {
  // Connections carry one request at a time; idle connections are polled so
  // that stop() is honoured.
  while (!stop_.load()) {
    pollfd p{sock.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc < 0 && errno != EINTR) return;
    if (rc <= 0) continue;

    std::string frame(kFrameHeaderBytes, '\0');
    const auto deadline = Clock::now() + kDefaultMigrationTimeout;
    try {
      read_exact(sock.fd(), frame.data(), kFrameHeaderBytes, deadline);
      const std::uint32_t length = read_frame_length(frame);
      if (length > kMaxFrameBody) {
        write_all(sock.fd(), encode_message(status_error(node_.status(), "oversize frame")));
        return;
      }
      frame.resize(kFrameHeaderBytes + length);
      read_exact(sock.fd(), frame.data() + kFrameHeaderBytes, length, deadline);
    } catch (const Error&) {
      return;  // peer went away
    }

    DecodeResult decoded = decode_message(frame);
    if (decoded.kind != DecodeResult::Kind::kMessage) {
      const std::string why = decoded.rejected_version
                                  ? "protocol version mismatch: node speaks " +
                                        std::to_string(kProtocolVersion) + ", peer sent " +
                                        std::to_string(*decoded.rejected_version)
                                  : decoded.error;
      try {
        write_all(sock.fd(), encode_message(status_error(node_.status(), why)));
      } catch (const Error&) {
      }
      return;
    }

    const bool shutdown_requested = [&] {
      const auto* req = std::get_if<StatusReq>(&decoded.message->body);
      return req != nullptr && req->shutdown;
    }();
    try {
      write_all(sock.fd(), encode_message(handle(*decoded.message)));
    } catch (const Error&) {
      return;
    }
    if (shutdown_requested) {
      stop();
      return;
    }
  }
}

WireMessage NodeServer::handle(const WireMessage& request) {
  if (request.protocol_version != kProtocolVersion) {
    return status_error(node_.status(), "protocol version mismatch");
  }
  return std::visit(
      [this, &request](const auto& body) -> WireMessage {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, AgentArrive>) {
          try {
            return WireMessage{kProtocolVersion, AgentAck{node_.visit(body.agent), ""}};
          } catch (const std::exception& e) {
            return WireMessage{kProtocolVersion, AgentAck{body.agent, e.what()}};
          }
        } else if constexpr (std::is_same_v<T, TableSnapshotReq>) {
          return WireMessage{kProtocolVersion, TableSnapshot{node_.snapshot(), false}};
        } else if constexpr (std::is_same_v<T, TableSnapshot>) {
          if (!body.install) return status_error(node_.status(), "unexpected TABLE_SNAPSHOT");
          try {
            node_.install(body.table);
          } catch (const std::exception& e) {
            return status_error(node_.status(), e.what());
          }
          return WireMessage{kProtocolVersion, Status{node_.status(), "", {}}};
        } else if constexpr (std::is_same_v<T, StatusReq>) {
          if (body.run_iterations > 0) node_.advance(body.run_iterations);
          if (body.flush) node_.flush_sample();
          Status st{node_.status(), "", {}};
          if (body.drain) st.records = node_.drain_records();
          return WireMessage{kProtocolVersion, std::move(st)};
        } else {
          return status_error(node_.status(),
                              "unexpected " + std::string(to_string(request.type())) + " request");
        }
      },
      request.body);
}

// ---------------------------------------------------------------------------
// TcpPeer

MobileAgent TcpPeer::visit(const MobileAgent& agent) { return migrate(agent, endpoint_, timeout_); }

QTable TcpPeer::snapshot() {
  WireMessage reply;
  try {
    reply = exchange(endpoint_, WireMessage{kProtocolVersion, TableSnapshotReq{}}, timeout_);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMigration, "snapshot from " + endpoint_.to_string() + ": " + e.what());
  }
  if (auto* snap = std::get_if<TableSnapshot>(&reply.body)) return std::move(snap->table);
  throw Error(ErrorCode::kProtocol, "expected TABLE_SNAPSHOT from " + endpoint_.to_string());
}

void TcpPeer::install(const QTable& table) {
  WireMessage reply;
  try {
    reply = exchange(endpoint_, WireMessage{kProtocolVersion, TableSnapshot{table, true}}, timeout_);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMigration, "install on " + endpoint_.to_string() + ": " + e.what());
  }
  const auto* st = std::get_if<Status>(&reply.body);
  if (st == nullptr || !st->error.empty()) {
    throw Error(ErrorCode::kProtocol, "install on " + endpoint_.to_string() + " rejected");
  }
}

Status TcpPeer::control(const StatusReq& req, std::chrono::milliseconds timeout) {
  WireMessage reply;
  try {
    reply = exchange(endpoint_, WireMessage{kProtocolVersion, req}, timeout);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMigration, "control of " + endpoint_.to_string() + ": " + e.what());
  }
  auto* st = std::get_if<Status>(&reply.body);
  if (st == nullptr) {
    throw Error(ErrorCode::kProtocol, "expected STATUS from " + endpoint_.to_string());
  }
  if (!st->error.empty()) {
    throw Error(ErrorCode::kProtocol, endpoint_.to_string() + ": " + st->error);
  }
  return std::move(*st);
}

void TcpPeer::advance(std::uint64_t k) {
  // Learner work is unbounded in wall time when paced; allow generously.
  control(StatusReq{k, false, false, false}, std::chrono::minutes(30));
}

NodeStatus TcpPeer::status() { return control(StatusReq{}, timeout_).node; }

void TcpPeer::flush() { control(StatusReq{0, true, false, false}, timeout_); }

std::vector<MetricsRecord> TcpPeer::drain() {
  return control(StatusReq{0, false, true, false}, timeout_).records;
}

void TcpPeer::shutdown() { control(StatusReq{0, false, false, true}, timeout_); }

}  // namespace dfrl
