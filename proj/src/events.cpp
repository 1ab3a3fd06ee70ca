#include "coreg/events.hpp"

#include <filesystem>
#include <sstream>

namespace coreg {

std::string_view to_string(TranscriptSource source) noexcept {
  switch (source) {
    case TranscriptSource::Asr: return "Asr";
    case TranscriptSource::LlmResponse: return "LlmResponse";
    case TranscriptSource::OperatorAnnotation: return "OperatorAnnotation";
  }
  return "?";
}

std::optional<TranscriptSource> parse_transcript_source(std::string_view text) noexcept {
  for (auto s : {TranscriptSource::Asr, TranscriptSource::LlmResponse,
                 TranscriptSource::OperatorAnnotation}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const TranscriptEntry& entry) {
  j = nlohmann::json{{"id", entry.id},
                     {"speaker", to_string(entry.speaker)},
                     {"text", entry.text},
                     {"t_start", entry.t_start},
                     {"t_end", entry.t_end},
                     {"source", to_string(entry.source)}};
}

void from_json(const nlohmann::json& j, TranscriptEntry& entry) {
  entry.id = j.at("id").get<std::uint64_t>();
  auto speaker = parse_speaker(j.at("speaker").get<std::string>());
  auto source = parse_transcript_source(j.at("source").get<std::string>());
  if (!speaker || !source) throw std::invalid_argument("bad transcript entry enum value");
  entry.speaker = *speaker;
  entry.source = *source;
  entry.text = j.at("text").get<std::string>();
  entry.t_start = j.at("t_start").get<SessionMs>();
  entry.t_end = j.at("t_end").get<SessionMs>();
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::TranscriptAdded: return "TranscriptAdded";
    case EventKind::InterventionTriggered: return "InterventionTriggered";
    case EventKind::InterventionCompleted: return "InterventionCompleted";
    case EventKind::InterventionPreempted: return "InterventionPreempted";
    case EventKind::SensorFired: return "SensorFired";
    case EventKind::BehaviorStarted: return "BehaviorStarted";
    case EventKind::TimerPaused: return "TimerPaused";
    case EventKind::TimerResumed: return "TimerResumed";
    case EventKind::PhaseChanged: return "PhaseChanged";
    case EventKind::OperatorNote: return "OperatorNote";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) noexcept {
  for (auto kind : {EventKind::TranscriptAdded, EventKind::InterventionTriggered,
                    EventKind::InterventionCompleted, EventKind::InterventionPreempted,
                    EventKind::SensorFired, EventKind::BehaviorStarted, EventKind::TimerPaused,
                    EventKind::TimerResumed, EventKind::PhaseChanged, EventKind::OperatorNote}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const SessionEvent& event) {
  j = nlohmann::json{{"seq", event.seq},
                     {"ts", event.ts},
                     {"kind", to_string(event.kind)},
                     {"payload", event.payload}};
}

void from_json(const nlohmann::json& j, SessionEvent& event) {
  event.seq = j.at("seq").get<std::uint64_t>();
  event.ts = j.at("ts").get<SessionMs>();
  auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown event kind");
  event.kind = *kind;
  event.payload = j.value("payload", nlohmann::json::object());
}

std::string to_jsonl(const SessionEvent& event) { return nlohmann::json(event).dump(); }

std::optional<LogViolation> validate_event_log(std::span<const SessionEvent> events) {
  bool episode_open = false;
  bool timer_paused = false;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (i > 0 && e.seq <= events[i - 1].seq) {
      return LogViolation{i, "seq not strictly increasing"};
    }
    switch (e.kind) {
      case EventKind::TimerPaused:
        if (timer_paused) return LogViolation{i, "pause without resume"};
        timer_paused = true;
        break;
      case EventKind::TimerResumed:
        if (!timer_paused) return LogViolation{i, "resume without pause"};
        timer_paused = false;
        break;
      case EventKind::InterventionTriggered:
        if (episode_open) return LogViolation{i, "trigger while an episode is unresolved"};
        episode_open = true;
        break;
      case EventKind::InterventionCompleted:
      case EventKind::InterventionPreempted:
        if (!episode_open) return LogViolation{i, "resolution without trigger"};
        episode_open = false;
        break;
      default:
        break;
    }
  }
  if (episode_open) return LogViolation{events.size(), "episode never resolved"};
  if (timer_paused) return LogViolation{events.size(), "timer left paused"};
  return std::nullopt;
}

LogParseError::LogParseError(std::size_t line, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) + ": " + detail), line_(line) {}

std::vector<SessionEvent> read_event_log(std::istream& in) {
  std::vector<SessionEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line).get<SessionEvent>());
    } catch (const std::exception& e) {
      throw LogParseError(line_no, e.what());
    }
  }
  return events;
}

std::vector<SessionEvent> read_event_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log " + path);
  return read_event_log(in);
}

EventLogWriter::EventLogWriter(const std::string& path) : path_(path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open log for writing: " + path);
}

void EventLogWriter::append(const SessionEvent& event) {
  out_ << to_jsonl(event) << '\n';
  out_.flush();
}

std::vector<SessionEvent> mask_timestamps(std::span<const SessionEvent> events) {
  std::vector<SessionEvent> masked(events.begin(), events.end());
  for (auto& e : masked) e.ts = 0;
  return masked;
}

}  // namespace coreg
