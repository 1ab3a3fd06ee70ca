#pragma once

#include <memory>
#include <string>

#include "coreg/engine.hpp"
#include "coreg/gateway/hub.hpp"
#include "coreg/gateway/ws.hpp"

namespace coreg::oracle {

/// A served session with mock backends on a free loopback port.
class LiveRig {
 public:
  explicit LiveRig(std::string token = "secret", double time_scale = 1.0, SessionConfig config = {});
  ~LiveRig();

  unsigned short port() const noexcept { return port_; }
  const std::string& token() const noexcept { return token_; }
  gateway::LiveSession& live() { return *live_; }
  /// Connects and completes Hello for `role`; throws on any failure.
  std::unique_ptr<gateway::WsClient> join(ParticipantRole role);

 private:
  std::string token_;
  std::unique_ptr<gateway::LiveSession> live_;
  std::unique_ptr<gateway::Hub> hub_;
  std::unique_ptr<gateway::WsServer> server_;
  unsigned short port_ = 0;
};

}  // namespace coreg::oracle
