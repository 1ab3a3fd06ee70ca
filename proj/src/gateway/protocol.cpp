#include "coreg/gateway/protocol.hpp"

#include "coreg/codec.hpp"

namespace coreg::gateway {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 13> kTypeNames{
    "hello",          "sensor_event", "behavior_command_batch", "audio_chunk",     "speak_done",
    "transcript_update", "intervention_command", "state_update", "timer_update", "phase_command",
    "annotate_speaker", "ack",        "error",
};

std::string_view action_name(msg::InterventionCommand::Action a) {
  switch (a) {
    case msg::InterventionCommand::Action::Trigger: return "trigger";
    case msg::InterventionCommand::Action::End: return "end";
    case msg::InterventionCommand::Action::ReassignAddressee: return "reassign_addressee";
  }
  return "?";
}

json to_payload(const msg::Hello& m) { return {{"role", to_string(m.role)}}; }

json to_payload(const msg::SensorEventMsg& m) {
  auto j = behavior::sensor_to_json(m.event);
  j["ts"] = m.event.ts;
  return j;
}

json to_payload(const msg::BehaviorCommandBatch& m) {
  return {{"script", m.script}, {"phase", m.phase}, {"commands", m.commands}};
}

json to_payload(const msg::AudioChunk& m) { return {{"idx", m.idx}, {"pcm_b64", pcm_to_base64(m.pcm)}}; }
json to_payload(const msg::SpeakDone&) { return json::object(); }
json to_payload(const msg::TranscriptUpdate& m) { return {{"entry", m.entry}}; }

json to_payload(const msg::InterventionCommand& m) {
  json j{{"action", action_name(m.action)}};
  if (m.command) j["command"] = to_string(*m.command);
  if (m.action == msg::InterventionCommand::Action::ReassignAddressee) j["phase_index"] = m.phase_index;
  return j;
}

json to_payload(const msg::StateUpdate& m) { return {{"state", m.state}}; }
json to_payload(const msg::TimerUpdate& m) { return {{"timer", m.timer}}; }
json to_payload(const msg::PhaseCommand&) { return {{"action", "advance"}}; }

json to_payload(const msg::AnnotateSpeaker& m) {
  return {{"entry_id", m.entry_id}, {"role", to_string(m.role)}};
}

json to_payload(const msg::Ack& m) {
  json j{{"seq", m.seq}};
  if (!m.warning.empty()) j["warning"] = m.warning;
  return j;
}

json to_payload(const msg::Error& m) { return {{"code", m.code}, {"detail", m.detail}}; }

msg::InterventionCommand intervention_from(const json& p) {
  msg::InterventionCommand m;
  std::string action = p.value("action", "");
  std::optional<std::string> command;
  for (const char* key : {"command", "strategy", "code"}) {
    if (p.contains(key)) command = p[key].get<std::string>();
  }
  if (action.empty()) action = command ? "trigger" : "";
  if (action == "trigger") {
    if (!command) throw std::invalid_argument("trigger without command");
    auto cmd = parse_trigger_command(*command);
    if (!cmd) throw std::invalid_argument("unknown strategy or behavior code: " + *command);
    m.action = msg::InterventionCommand::Action::Trigger;
    m.command = *cmd;
  } else if (action == "end") {
    m.action = msg::InterventionCommand::Action::End;
  } else if (action == "reassign_addressee") {
    m.action = msg::InterventionCommand::Action::ReassignAddressee;
    m.phase_index = p.at("phase_index").get<std::size_t>();
  } else {
    throw std::invalid_argument("unknown intervention action: " + action);
  }
  return m;
}

}  // namespace

MessageKind kind_of(const Message& m) noexcept { return static_cast<MessageKind>(m.index()); }

std::string_view type_name(MessageKind kind) noexcept { return kTypeNames[static_cast<std::size_t>(kind)]; }

std::optional<MessageKind> parse_type_name(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == text) return static_cast<MessageKind>(i);
  }
  return std::nullopt;
}

json payload_to_json(const Message& m) {
  return std::visit([](const auto& v) { return to_payload(v); }, m);
}

Message payload_from_json(MessageKind kind, const json& p) {
  switch (kind) {
    case MessageKind::Hello: {
      auto role = parse_participant_role(p.at("role").get<std::string>());
      if (!role) throw std::invalid_argument("unknown role");
      return msg::Hello{*role};
    }
    case MessageKind::SensorEvent:
      return msg::SensorEventMsg{behavior::sensor_from_json(p)};
    case MessageKind::BehaviorCommandBatch:
      return msg::BehaviorCommandBatch{p.value("script", ""), p.value("phase", ""),
                                       p.at("commands").get<std::vector<behavior::ActuatorCommand>>()};
    case MessageKind::AudioChunk: {
      auto pcm = pcm_from_base64(p.at("pcm_b64").get<std::string>());
      if (!pcm) throw std::invalid_argument("pcm_b64 is not valid base64 PCM-16");
      return msg::AudioChunk{p.at("idx").get<std::uint64_t>(), std::move(*pcm)};
    }
    case MessageKind::SpeakDone:
      return msg::SpeakDone{};
    case MessageKind::TranscriptUpdate:
      return msg::TranscriptUpdate{p.at("entry").get<TranscriptEntry>()};
    case MessageKind::InterventionCommand:
      return intervention_from(p);
    case MessageKind::StateUpdate:
      return msg::StateUpdate{p.at("state")};
    case MessageKind::TimerUpdate:
      return msg::TimerUpdate{p.at("timer")};
    case MessageKind::PhaseCommand:
      if (p.value("action", "advance") != "advance") throw std::invalid_argument("unknown phase action");
      return msg::PhaseCommand{};
    case MessageKind::AnnotateSpeaker: {
      auto role = parse_speaker(p.at("role").get<std::string>());
      if (!role) throw std::invalid_argument("unknown speaker role");
      return msg::AnnotateSpeaker{p.at("entry_id").get<std::uint64_t>(), *role};
    }
    case MessageKind::Ack:
      return msg::Ack{p.at("seq").get<std::uint64_t>(), p.value("warning", "")};
    case MessageKind::Error:
      return msg::Error{p.at("code").get<std::string>(), p.value("detail", "")};
  }
  throw std::invalid_argument("unknown kind");
}

std::string encode(const Envelope& env) {
  const json j{{"v", env.v},
               {"type", type_name(env.kind())},
               {"seq", env.seq},
               {"ts", env.ts},
               {"payload", payload_to_json(env.message)}};
  return j.dump();
}

Envelope decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DecodeError("bad_message", e.what());
  }
  if (!j.is_object()) throw DecodeError("bad_message", "frame is not a JSON object");
  try {
    Envelope env;
    env.v = j.at("v").get<int>();
    if (env.v != kProtocolVersion) throw DecodeError("bad_version", "unsupported protocol version " + std::to_string(env.v));
    const auto type = j.at("type").get<std::string>();
    const auto kind = parse_type_name(type);
    if (!kind) throw DecodeError("bad_message", "unknown type: " + type);
    env.seq = j.at("seq").get<std::uint64_t>();
    env.ts = j.value("ts", SessionMs{0});
    env.message = payload_from_json(*kind, j.value("payload", json::object()));
    return env;
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError("bad_message", e.what());
  }
}

bool authorize(ParticipantRole role, MessageKind kind) noexcept {
  if (!valid_client_role(role)) return false;
  switch (kind) {
    case MessageKind::Hello:
    case MessageKind::Ack:
      return true;
    case MessageKind::InterventionCommand:
    case MessageKind::PhaseCommand:
    case MessageKind::AnnotateSpeaker:
      return role == ParticipantRole::Operator;
    case MessageKind::SensorEvent:
    case MessageKind::AudioChunk:
    case MessageKind::SpeakDone:
      return role == ParticipantRole::Robot;
    case MessageKind::BehaviorCommandBatch:
    case MessageKind::TranscriptUpdate:
    case MessageKind::StateUpdate:
    case MessageKind::TimerUpdate:
    case MessageKind::Error:
      return false;
  }
  return false;
}

bool valid_client_role(ParticipantRole role) noexcept {
  return role == ParticipantRole::Operator || role == ParticipantRole::Robot;
}

}  // namespace coreg::gateway
