#include "generators.hpp"

#include <map>

namespace coreg::oracle {

using namespace gateway;

namespace {

std::string random_text(std::mt19937& rng) {
  static const std::vector<std::string> words{"we", "need", "the", "blue", "piece", "héllo", "\"quoted\"", "a\nb", "roof"};
  std::string out;
  const int n = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
  }
  return out;
}

template <typename E>
E pick(std::mt19937& rng, int count) {
  return static_cast<E>(std::uniform_int_distribution<int>(0, count - 1)(rng));
}

behavior::SensorEvent random_sensor(std::mt19937& rng) {
  const SessionMs ts = std::uniform_int_distribution<SessionMs>(0, 1'000'000)(rng);
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: return behavior::SensorEvent::touch(pick<behavior::TouchRegion>(rng, 2), ts);
    case 1: return behavior::SensorEvent::face(std::uniform_real_distribution<double>(-90.0, 90.0)(rng), ts);
    default: {
      auto e = behavior::SensorEvent::face_lost();
      e.ts = ts;
      return e;
    }
  }
}

Message random_message(std::mt19937& rng, MessageKind kind) {
  std::uniform_int_distribution<std::uint64_t> u64(0, 1'000'000);
  switch (kind) {
    case MessageKind::Hello:
      return msg::Hello{pick<ParticipantRole>(rng, 4)};
    case MessageKind::SensorEvent:
      return msg::SensorEventMsg{random_sensor(rng)};
    case MessageKind::BehaviorCommandBatch: {
      msg::BehaviorCommandBatch b{random_text(rng), random_text(rng), {}};
      const int n = std::uniform_int_distribution<int>(0, 8)(rng);
      for (int i = 0; i < n; ++i) {
        behavior::ActuatorCommand c;
        c.at_ms = static_cast<SessionMs>(u64(rng));
        c.channel = pick<behavior::Channel>(rng, 7);
        auto [lo, hi] = behavior::channel_range(c.channel);
        c.value = std::uniform_real_distribution<double>(lo, hi)(rng);
        c.ramp_ms = std::uniform_int_distribution<SessionMs>(0, 2000)(rng);
        b.commands.push_back(c);
      }
      return b;
    }
    case MessageKind::AudioChunk: {
      msg::AudioChunk a{u64(rng), {}};
      const int n = std::uniform_int_distribution<int>(0, 700)(rng);
      std::uniform_int_distribution<int> s(-32768, 32767);
      for (int i = 0; i < n; ++i) a.pcm.push_back(static_cast<std::int16_t>(s(rng)));
      return a;
    }
    case MessageKind::SpeakDone:
      return msg::SpeakDone{};
    case MessageKind::TranscriptUpdate: {
      TranscriptEntry e;
      e.id = u64(rng);
      e.speaker = pick<Speaker>(rng, 4);
      e.text = random_text(rng);
      e.t_start = static_cast<SessionMs>(u64(rng));
      e.t_end = e.t_start + 500;
      e.source = pick<TranscriptSource>(rng, 3);
      return msg::TranscriptUpdate{e};
    }
    case MessageKind::InterventionCommand: {
      msg::InterventionCommand c;
      c.action = pick<msg::InterventionCommand::Action>(rng, 3);
      if (c.action == msg::InterventionCommand::Action::Trigger) {
        if (std::uniform_int_distribution<int>(0, 1)(rng)) c.command = pick<StrategyKind>(rng, 6);
        else c.command = pick<BehaviorCode>(rng, 6);
      }
      if (c.action == msg::InterventionCommand::Action::ReassignAddressee) c.phase_index = u64(rng) % 3;
      return c;
    }
    case MessageKind::StateUpdate:
      return msg::StateUpdate{{{"phase", random_text(rng)}, {"remaining_ms", u64(rng)}, {"paused", true}}};
    case MessageKind::TimerUpdate:
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) return msg::TimerUpdate{nullptr};
      return msg::TimerUpdate{{{"budget_ms", 900000}, {"remaining_ms", u64(rng)}, {"paused", false}}};
    case MessageKind::PhaseCommand:
      return msg::PhaseCommand{};
    case MessageKind::AnnotateSpeaker:
      return msg::AnnotateSpeaker{u64(rng), pick<Speaker>(rng, 4)};
    case MessageKind::Ack:
      return msg::Ack{u64(rng), random_text(rng)};
    case MessageKind::Error:
      return msg::Error{random_text(rng), random_text(rng)};
  }
  return msg::SpeakDone{};
}

}  // namespace

Envelope random_envelope(std::mt19937& rng, MessageKind kind) {
  Envelope env;
  env.seq = std::uniform_int_distribution<std::uint64_t>(1, 1u << 30)(rng);
  env.ts = std::uniform_int_distribution<SessionMs>(0, 3'600'000)(rng);
  env.message = random_message(rng, kind);
  return env;
}

Envelope random_envelope(std::mt19937& rng) {
  const auto i = std::uniform_int_distribution<std::size_t>(0, kAllMessageKinds.size() - 1)(rng);
  return random_envelope(rng, kAllMessageKinds[i]);
}

bool expected_permission(ParticipantRole role, MessageKind kind) {
  //                                   operator robot
  static const std::map<MessageKind, std::pair<bool, bool>> table{
      {MessageKind::Hello, {true, true}},
      {MessageKind::SensorEvent, {false, true}},
      {MessageKind::BehaviorCommandBatch, {false, false}},
      {MessageKind::AudioChunk, {false, true}},
      {MessageKind::SpeakDone, {false, true}},
      {MessageKind::TranscriptUpdate, {false, false}},
      {MessageKind::InterventionCommand, {true, false}},
      {MessageKind::StateUpdate, {false, false}},
      {MessageKind::TimerUpdate, {false, false}},
      {MessageKind::PhaseCommand, {true, false}},
      {MessageKind::AnnotateSpeaker, {true, false}},
      {MessageKind::Ack, {true, true}},
      {MessageKind::Error, {false, false}},
  };
  const auto& row = table.at(kind);
  if (role == ParticipantRole::Operator) return row.first;
  if (role == ParticipantRole::Robot) return row.second;
  return false;
}

}  // namespace coreg::oracle
