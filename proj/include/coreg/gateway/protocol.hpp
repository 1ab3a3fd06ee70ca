#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coreg/behavior.hpp"
#include "coreg/core.hpp"
#include "coreg/events.hpp"

namespace coreg::gateway {

inline constexpr int kProtocolVersion = 1;

namespace msg {

struct Hello {
  ParticipantRole role = ParticipantRole::Operator;
  bool operator==(const Hello&) const = default;
};

struct SensorEventMsg {
  behavior::SensorEvent event;
  bool operator==(const SensorEventMsg&) const = default;
};

struct BehaviorCommandBatch {
  std::string script;
  std::string phase;
  std::vector<behavior::ActuatorCommand> commands;
  bool operator==(const BehaviorCommandBatch&) const = default;
};

/// 16 kHz mono PCM-16, base64 of the little-endian bytes on the wire.
struct AudioChunk {
  std::uint64_t idx = 0;
  std::vector<std::int16_t> pcm;
  bool operator==(const AudioChunk&) const = default;
};

struct SpeakDone {
  bool operator==(const SpeakDone&) const = default;
};

struct TranscriptUpdate {
  TranscriptEntry entry;
  bool operator==(const TranscriptUpdate&) const = default;
};

struct InterventionCommand {
  enum class Action { Trigger, End, ReassignAddressee };
  Action action = Action::Trigger;
  /// Set for Trigger.
  std::optional<TriggerCommand> command;
  /// Used by ReassignAddressee.
  std::size_t phase_index = 0;
  bool operator==(const InterventionCommand&) const = default;
};

struct StateUpdate {
  nlohmann::json state;
  bool operator==(const StateUpdate&) const = default;
};

struct TimerUpdate {
  /// GameTimer snapshot, or null outside Session1/Session2.
  nlohmann::json timer;
  bool operator==(const TimerUpdate&) const = default;
};

struct PhaseCommand {
  bool operator==(const PhaseCommand&) const = default;
};

struct AnnotateSpeaker {
  std::uint64_t entry_id = 0;
  Speaker role = Speaker::Unknown;
  bool operator==(const AnnotateSpeaker&) const = default;
};

struct Ack {
  std::uint64_t seq = 0;
  std::string warning;
  bool operator==(const Ack&) const = default;
};

struct Error {
  std::string code;
  std::string detail;
  bool operator==(const Error&) const = default;
};

}  // namespace msg

using Message = std::variant<msg::Hello, msg::SensorEventMsg, msg::BehaviorCommandBatch, msg::AudioChunk,
                             msg::SpeakDone, msg::TranscriptUpdate, msg::InterventionCommand, msg::StateUpdate,
                             msg::TimerUpdate, msg::PhaseCommand, msg::AnnotateSpeaker, msg::Ack, msg::Error>;

/// Indexes match the Message alternatives.
enum class MessageKind {
  Hello,
  SensorEvent,
  BehaviorCommandBatch,
  AudioChunk,
  SpeakDone,
  TranscriptUpdate,
  InterventionCommand,
  StateUpdate,
  TimerUpdate,
  PhaseCommand,
  AnnotateSpeaker,
  Ack,
  Error,
};

inline constexpr std::array kAllMessageKinds{
    MessageKind::Hello,           MessageKind::SensorEvent,  MessageKind::BehaviorCommandBatch,
    MessageKind::AudioChunk,      MessageKind::SpeakDone,    MessageKind::TranscriptUpdate,
    MessageKind::InterventionCommand, MessageKind::StateUpdate, MessageKind::TimerUpdate,
    MessageKind::PhaseCommand,    MessageKind::AnnotateSpeaker, MessageKind::Ack,
    MessageKind::Error,
};

MessageKind kind_of(const Message& m) noexcept;
/// Wire type string: "hello", "sensor_event", "intervention_command", ...
std::string_view type_name(MessageKind kind) noexcept;
std::optional<MessageKind> parse_type_name(std::string_view text) noexcept;

struct Envelope {
  int v = kProtocolVersion;
  std::uint64_t seq = 0;
  SessionMs ts = 0;
  Message message;

  MessageKind kind() const noexcept { return kind_of(message); }
  bool operator==(const Envelope&) const = default;
};

/// Compact single-line JSON, UTF-8, no trailing whitespace.
std::string encode(const Envelope& env);

class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::string code, const std::string& detail)
      : std::runtime_error(detail), code_(std::move(code)) {}
  /// "bad_message" or "bad_version".
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

Envelope decode(std::string_view text);

nlohmann::json payload_to_json(const Message& m);
Message payload_from_json(MessageKind kind, const nlohmann::json& payload);

/// Client-to-server role gate. Operator: intervention, phase and
/// annotation commands. Robot: sensor events, microphone audio, speak
/// done. Both: hello and ack. Server-originated kinds are never accepted.
bool authorize(ParticipantRole role, MessageKind kind) noexcept;

/// Roles that may open a connection.
bool valid_client_role(ParticipantRole role) noexcept;

}  // namespace coreg::gateway
