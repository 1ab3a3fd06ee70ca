#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "coreg/engine.hpp"
#include "coreg/gateway/protocol.hpp"
#include "coreg/vad.hpp"

namespace coreg::gateway {

/// Serializes every session mutation onto one actor thread and runs the
/// session clock. Session time is wall time since start() times time_scale.
class LiveSession final : public SessionObserver {
 public:
  struct Options {
    double time_scale = 1.0;
    std::chrono::milliseconds tick{20};
    vad::VadConfig vad;
    /// Session time between periodic TimerUpdate pushes.
    SessionMs timer_push_ms = 1000;
  };

  using Done = std::function<void(const HandleResult&)>;
  /// Receives outbound messages; `to` restricts delivery to one role.
  using Publisher = std::function<void(const Message&, std::optional<ParticipantRole> to)>;

  LiveSession(std::unique_ptr<SessionEngine> engine, std::shared_ptr<pipeline::Pipeline> pipeline, Options options);
  ~LiveSession() override;

  void set_publisher(Publisher publisher);
  void start();
  void stop();

  /// Queues an input; `done` runs on the actor thread once it is applied.
  /// Trigger and End first cancel any turn in flight.
  void submit(SessionInput in, Done done = {});
  /// Queues robot microphone audio for voice activity detection.
  void submit_audio(std::vector<std::int16_t> pcm, Done done = {});

  SessionMs clock_now() const;
  /// Latest published state (same shape as StateUpdate.state).
  nlohmann::json snapshot() const;
  nlohmann::json timer_snapshot() const;
  /// Copy of the events logged so far.
  std::vector<SessionEvent> events() const;

  void on_event(const SessionEvent& ev) override;
  void on_behavior(std::span<const behavior::ActuatorCommand> commands) override;
  void on_audio(const pipeline::AudioChunk& chunk) override;
  void on_transcript(const TranscriptEntry& entry) override;

 private:
  struct Job {
    std::optional<SessionInput> input;
    std::vector<std::int16_t> pcm;
    Done done;
  };

  void loop();
  HandleResult ingest_audio(std::vector<std::int16_t> pcm, SessionMs now);
  void publish(const Message& m, std::optional<ParticipantRole> to);
  void refresh_state(SessionMs now, bool force);

  std::unique_ptr<SessionEngine> engine_;
  std::shared_ptr<pipeline::Pipeline> pipeline_;
  Options options_;
  vad::Segmenter segmenter_;
  std::vector<std::int16_t> audio_carry_;
  std::uint64_t next_frame_ = 0;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> jobs_;
  bool running_ = false;
  std::thread thread_;
  std::chrono::steady_clock::time_point t0_;

  mutable std::mutex state_mu_;
  nlohmann::json snapshot_;
  nlohmann::json timer_;
  std::vector<SessionEvent> events_;
  std::size_t published_events_ = 0;
  SessionMs last_timer_push_ = -1;

  std::mutex pub_mu_;
  Publisher publisher_;
};

/// Outbound side of one connection. Implementations must be thread-safe
/// and deliver frames in call order.
class Outbox {
 public:
  virtual ~Outbox() = default;
  virtual void send(std::string frame) = 0;
  /// Closes after frames already sent are flushed.
  virtual void close() = 0;
};

using ConnectionId = std::uint64_t;

/// Transport-independent connection hub: handshake, sequencing, role
/// gating, dispatch into the live session, and fan-out.
class Hub {
 public:
  explicit Hub(LiveSession& live);
  ~Hub();
  Hub(const Hub&) = delete;
  Hub& operator=(const Hub&) = delete;

  ConnectionId attach(std::shared_ptr<Outbox> out);
  void detach(ConnectionId id);
  /// Handles one inbound text frame.
  void on_frame(ConnectionId id, std::string_view text);
  /// Sends to every connection that completed Hello, optionally one role only.
  void publish(const Message& m, std::optional<ParticipantRole> to = std::nullopt);

  std::size_t connection_count() const;
  /// Drops every connection without sending anything.
  void clear();

 private:
  struct Conn {
    std::shared_ptr<Outbox> out;
    std::optional<ParticipantRole> role;
    std::uint64_t in_seq = 0;
    std::uint64_t out_seq = 0;
    bool closed = false;
  };

  void send_locked(Conn& c, Message m);
  void reply(ConnectionId id, Message m);
  void dispatch(ConnectionId id, ParticipantRole role, const Envelope& env);

  LiveSession& live_;
  mutable std::mutex mu_;
  std::map<ConnectionId, Conn> conns_;
  ConnectionId next_id_ = 1;
};

}  // namespace coreg::gateway
