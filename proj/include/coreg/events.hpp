#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coreg/core.hpp"

namespace coreg {

enum class TranscriptSource { Asr, LlmResponse, OperatorAnnotation };

std::string_view to_string(TranscriptSource source) noexcept;
std::optional<TranscriptSource> parse_transcript_source(std::string_view text) noexcept;

/// One attributed utterance in the session record.
struct TranscriptEntry {
  std::uint64_t id = 0;
  Speaker speaker = Speaker::Unknown;
  std::string text;
  SessionMs t_start = 0;
  SessionMs t_end = 0;
  TranscriptSource source = TranscriptSource::Asr;

  bool operator==(const TranscriptEntry&) const = default;
};

void to_json(nlohmann::json& j, const TranscriptEntry& entry);
void from_json(const nlohmann::json& j, TranscriptEntry& entry);

enum class EventKind {
  TranscriptAdded,
  InterventionTriggered,
  InterventionCompleted,
  InterventionPreempted,
  SensorFired,
  BehaviorStarted,
  TimerPaused,
  TimerResumed,
  PhaseChanged,
  OperatorNote,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view text) noexcept;

struct SessionEvent {
  std::uint64_t seq = 0;
  SessionMs ts = 0;
  EventKind kind = EventKind::OperatorNote;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const SessionEvent&) const = default;
};

void to_json(nlohmann::json& j, const SessionEvent& event);
void from_json(const nlohmann::json& j, SessionEvent& event);

/// One JSONL line, no trailing newline.
std::string to_jsonl(const SessionEvent& event);

struct LogViolation {
  std::size_t index = 0;
  std::string message;
};

/// Checks seq monotonicity, TimerPaused/TimerResumed alternation and
/// trigger/resolution pairing. Reports the first violation. An episode or
/// pause still open at the end of the log is reported at index == size.
std::optional<LogViolation> validate_event_log(std::span<const SessionEvent> events);

class LogParseError : public std::runtime_error {
 public:
  LogParseError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses a JSONL session log. Line numbers in errors are 1-based.
std::vector<SessionEvent> read_event_log(std::istream& in);
std::vector<SessionEvent> read_event_log_file(const std::string& path);

/// Append-only JSONL writer, flushed per event.
class EventLogWriter {
 public:
  explicit EventLogWriter(const std::string& path);
  void append(const SessionEvent& event);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

/// Copy of the log with every ts zeroed, for comparisons that ignore time.
std::vector<SessionEvent> mask_timestamps(std::span<const SessionEvent> events);

}  // namespace coreg
