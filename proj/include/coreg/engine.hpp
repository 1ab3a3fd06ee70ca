#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coreg/behavior.hpp"
#include "coreg/events.hpp"
#include "coreg/intervention.hpp"
#include "coreg/pipeline.hpp"
#include "coreg/session.hpp"

namespace coreg {

struct SessionConfig {
  SessionMs budget_ms = GameTimer::kDefaultBudgetMs;
  SessionMs break_ms = 300'000;
  CompletionPolicy completion;
  bool barge_in = false;
  behavior::ScriptParams script_params;
  std::string parent_name = "parent";
  std::string child_name = "child";

  /// Reads the keys it knows; missing keys keep their defaults. Throws
  /// std::invalid_argument on out-of-range values.
  static SessionConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Expression scripts per strategy.
class ScriptLibrary {
 public:
  static ScriptLibrary builtin(const behavior::ScriptParams& params = {});
  /// Loads `<dir>/<slug>.json` for every strategy. Throws
  /// behavior::ScriptFormatError naming the file on parse or structure errors.
  static ScriptLibrary load(const std::string& dir);

  const behavior::BehaviorScript& script(StrategyKind kind) const { return scripts_.at(kind); }

 private:
  std::map<StrategyKind, behavior::BehaviorScript> scripts_;
};

/// External inputs to a session. Everything else is derived from time.
namespace input {
struct Speech {
  vad::SpeechSegment segment;
  /// Overrides the attributor; set when re-driving a recorded session.
  std::optional<Speaker> speaker;
};
struct Sensor {
  behavior::SensorEvent event;
};
struct Trigger {
  TriggerCommand command;
};
struct End {};
struct Advance {};
struct Annotate {
  std::uint64_t entry_id = 0;
  Speaker role = Speaker::Unknown;
};
struct Reassign {
  std::size_t phase_index = 0;
};
/// The robot reports that audio playback finished.
struct SpeakDone {};
}  // namespace input

using SessionInput = std::variant<input::Speech, input::Sensor, input::Trigger, input::End,
                                  input::Advance, input::Annotate, input::Reassign, input::SpeakDone>;

/// Compact JSON form stored in the session log. Speech keeps timing and
/// channel only; its text lives in the matching transcript entry.
nlohmann::json input_to_json(const SessionInput& in);
/// Throws std::invalid_argument on unknown shapes.
SessionInput input_from_json(const nlohmann::json& j);

struct HandleResult {
  bool ok = true;
  std::string error_code;
  std::string detail;
  /// Accepted but had no effect, e.g. End while in Standby.
  std::string warning;

  static HandleResult fail(std::string code, std::string detail = {}) {
    return {false, std::move(code), std::move(detail), {}};
  }
};

/// Receives everything a session pushes outward. Default no-ops.
class SessionObserver {
 public:
  virtual ~SessionObserver() = default;
  virtual void on_event(const SessionEvent&) {}
  virtual void on_behavior(std::span<const behavior::ActuatorCommand>) {}
  virtual void on_audio(const pipeline::AudioChunk&) {}
  virtual void on_tts_cancel() {}
  virtual void on_transcript(const TranscriptEntry&) {}
};

/// One dyad session: phases, timer, intervention state machine, speech
/// cascade and robot expression. Single-threaded; time is passed in.
class SessionEngine {
 public:
  SessionEngine(SessionConfig cfg, std::shared_ptr<pipeline::Pipeline> pipeline,
                PromptLibrary prompts = PromptLibrary::builtin(),
                std::optional<ScriptLibrary> scripts = std::nullopt,
                std::shared_ptr<pipeline::SpeakerAttributor> attributor = nullptr);

  void set_observer(SessionObserver* observer) noexcept { observer_ = observer; }
  void set_log_writer(std::unique_ptr<EventLogWriter> writer) { writer_ = std::move(writer); }

  /// Logs the session configuration as the first event.
  void start();

  /// Processes every time-driven deadline up to and including `now`.
  void advance_to(SessionMs now);
  /// Earliest pending deadline, if any.
  std::optional<SessionMs> next_deadline() const;
  /// Advances to `now`, then applies the input.
  HandleResult handle(const SessionInput& in, SessionMs now);

  SessionMs now() const noexcept { return now_; }
  GamePhase phase() const noexcept { return phase_; }
  const EpisodeState& episode() const noexcept { return episode_; }
  const std::optional<GameTimer>& timer() const noexcept { return timer_; }
  const std::optional<RoleAssignment>& roles() const noexcept { return roles_; }
  const pipeline::ConversationHistory& history() const noexcept { return history_; }
  const std::vector<TranscriptEntry>& transcript() const noexcept { return transcript_; }
  const std::vector<SessionEvent>& events() const noexcept { return events_; }
  const std::vector<pipeline::TurnLatencyReport>& latencies() const noexcept { return latencies_; }
  bool robot_speaking() const noexcept { return speaking_; }
  std::string behavior_script() const { return script_ ? script_->id : std::string(); }
  std::string behavior_phase() const { return script_ ? behavior_state_.phase : std::string(); }
  const SessionConfig& config() const noexcept { return cfg_; }
  /// One record per finished game timer: phase, budget, remaining, paused time, pauses.
  const std::vector<nlohmann::json>& timer_history() const noexcept { return timer_history_; }

  /// Episode, phase, timer and robot state for StateUpdate messages.
  nlohmann::json snapshot() const;

 private:
  void process_deadlines(SessionMs t);
  void emit(EventKind kind, nlohmann::json payload);
  void note(std::string_view what, nlohmann::json extra = nlohmann::json::object());
  void apply(const EpisodeTransition& t);
  void start_script(StrategyKind kind);
  void tick_behavior();
  HandleResult reject(std::string code, std::string detail = {});
  void close_timer();

  HandleResult on_speech(const input::Speech& in);
  HandleResult on_sensor(const input::Sensor& in);
  HandleResult on_trigger(const input::Trigger& in);
  HandleResult on_end();
  HandleResult on_advance();
  HandleResult on_annotate(const input::Annotate& in);
  HandleResult on_reassign(const input::Reassign& in);
  HandleResult on_speak_done();

  TranscriptEntry& add_transcript(Speaker speaker, std::string text, SessionMs t_start, SessionMs t_end,
                                  TranscriptSource source);

  SessionConfig cfg_;
  std::shared_ptr<pipeline::Pipeline> pipeline_;
  PromptLibrary prompts_;
  ScriptLibrary scripts_;
  std::shared_ptr<pipeline::SpeakerAttributor> attributor_;
  SessionObserver* observer_ = nullptr;
  std::unique_ptr<EventLogWriter> writer_;

  SessionMs now_ = 0;
  std::uint64_t seq_ = 0;
  std::optional<nlohmann::json> pending_input_;
  std::vector<SessionEvent> events_;

  GamePhase phase_ = GamePhase::Setup;
  std::optional<GameTimer> timer_;
  bool expiry_announced_ = false;
  std::optional<SessionMs> break_until_;
  std::vector<nlohmann::json> timer_history_;
  std::optional<RoleAssignment> roles_;

  EpisodeState episode_;
  pipeline::ConversationHistory history_;
  std::vector<TranscriptEntry> transcript_;
  std::uint64_t next_entry_id_ = 1;
  std::vector<pipeline::TurnLatencyReport> latencies_;

  bool speaking_ = false;
  SessionMs speaking_until_ = 0;

  const behavior::BehaviorScript* script_ = nullptr;
  behavior::PhaseState behavior_state_;
  SessionMs script_start_ = 0;
  std::deque<behavior::Stimulus> stimuli_;
  bool outro_pending_ = false;
};

}  // namespace coreg
