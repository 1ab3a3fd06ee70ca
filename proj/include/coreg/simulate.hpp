#pragma once

#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coreg/engine.hpp"
#include "coreg/vad.hpp"

namespace coreg::sim {

/// A line of a dyad script that could not be parsed. Line numbers are 1-based.
class ScriptParseError : public std::runtime_error {
 public:
  ScriptParseError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace directive {
struct Utterance {
  Speaker speaker = Speaker::Parent;
  std::string text;
  std::string wav_path;
  std::optional<SessionMs> duration_ms;
  /// Robot reply fed to the scripted LLM for this turn.
  std::optional<std::string> reply;
};
struct Touch {
  behavior::TouchRegion region = behavior::TouchRegion::Back;
};
struct Face {
  double bearing_deg = 0.0;
};
struct FaceLost {};
struct OperatorTrigger {
  TriggerCommand command;
};
struct OperatorEnd {};
struct Advance {};
struct Reassign {
  std::size_t phase_index = 0;
};
}  // namespace directive

using DirectiveBody = std::variant<directive::Utterance, directive::Touch, directive::Face, directive::FaceLost,
                                   directive::OperatorTrigger, directive::OperatorEnd, directive::Advance,
                                   directive::Reassign>;

struct Directive {
  SessionMs at_ms = 0;
  std::size_t line = 0;
  DirectiveBody body;
};

/// Timed directives, one JSON object per line:
///   {"at_ms":0,"type":"advance"}
///   {"at_ms":1000,"type":"utterance","speaker":"parent","text":"...","reply":"..."}
///   {"at_ms":5000,"type":"trigger","command":"BreathingExercise"}
///   {"at_ms":9000,"type":"touch","region":"back"}
/// plus face, face_lost, end and reassign. Blank lines and lines starting
/// with '#' are skipped.
struct DyadScript {
  std::vector<Directive> directives;
  /// Directory that relative wav paths resolve against.
  std::string base_dir;
};

/// Throws ScriptParseError. at_ms must be non-decreasing.
DyadScript parse_dyad_script(std::istream& in, const std::string& base_dir = ".");
DyadScript load_dyad_script(const std::string& path);

/// Speech length assumed for a text utterance: 250 ms per word, at least 500 ms.
SessionMs utterance_duration(std::string_view text) noexcept;

struct SimulationOptions {
  SessionConfig session;
  /// Wall-clock speed-up; 0 runs as fast as possible.
  double compression = 0.0;
  /// Writes events.jsonl and metrics.json here when set.
  std::optional<std::string> out_dir;
  std::optional<PromptLibrary> prompts;
  std::optional<ScriptLibrary> scripts;
  vad::VadConfig vad;
  /// Overrides the scripted LLM, e.g. with an instrumented wrapper.
  std::shared_ptr<pipeline::LlmBackend> llm;
  SessionObserver* observer = nullptr;
};

struct SimulationResult {
  std::vector<SessionEvent> events;
  nlohmann::json metrics;
  double wall_ms = 0.0;
};

/// Drives one session from Setup to Debrief with mock backends. Phases the
/// script does not reach are advanced at the time of its last directive.
SimulationResult simulate(const DyadScript& script, const SimulationOptions& options);

/// Episode counts, turns, timer accounting and latency percentiles.
nlohmann::json session_metrics(const SessionEngine& engine);

struct ReplayResult {
  std::vector<SessionEvent> regenerated;
  /// Index of the first event that differs once timestamps are masked.
  std::optional<std::size_t> first_difference;
  bool identical() const noexcept { return !first_difference; }
};

/// Re-drives a session from the inputs recorded in its log against mock
/// backends and compares the regenerated log with the original.
ReplayResult replay(const std::vector<SessionEvent>& log);

}  // namespace coreg::sim
