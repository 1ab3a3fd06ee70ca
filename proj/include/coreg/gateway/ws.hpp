#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "coreg/gateway/hub.hpp"
#include "coreg/gateway/protocol.hpp"

namespace coreg::gateway {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  unsigned short port = 8765;
  /// Required bearer token; empty disables the check. Accepted as an
  /// "Authorization: Bearer" header or a `token` query parameter.
  std::string token;
};

/// WebSocket endpoint at /ws feeding a Hub. One I/O thread.
class WsServer {
 public:
  WsServer(Hub& hub, ServerOptions options);
  ~WsServer();

  /// Binds and starts serving; returns the bound port. Throws
  /// std::runtime_error if the address is unavailable.
  unsigned short start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Extracts a query parameter from a request target, URL-decoded.
std::optional<std::string> query_param(std::string_view target, std::string_view key);

class ConnectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimal client used by the simulated robot and tests. Sequence numbers
/// are assigned on send.
class WsClient {
 public:
  WsClient();
  ~WsClient();

  /// Throws ConnectError (including HTTP rejections such as 401).
  void connect(const std::string& host, unsigned short port, const std::string& target = "/ws");
  std::uint64_t send(Message m, SessionMs ts = 0);
  /// Sends a frame verbatim.
  void send_raw(std::string frame);
  std::optional<std::string> receive_raw(std::chrono::milliseconds timeout);
  /// Next decodable frame; undecodable frames are skipped.
  std::optional<Envelope> receive(std::chrono::milliseconds timeout);
  /// Receives until a message of `kind` arrives or the timeout elapses.
  std::optional<Envelope> receive_kind(MessageKind kind, std::chrono::milliseconds timeout);
  bool closed() const;
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace coreg::gateway
