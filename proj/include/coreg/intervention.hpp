#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coreg/core.hpp"
#include "coreg/events.hpp"

namespace coreg {

class NoPromptForStandby : public std::logic_error {
 public:
  NoPromptForStandby() : std::logic_error("NoPromptForStandby: the LLM is not activated in Standby") {}
};

class MissingPromptFile : public std::runtime_error {
 public:
  explicit MissingPromptFile(const std::string& path)
      : std::runtime_error("missing prompt fixture: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The verbatim system prompt for an active strategy. Throws
/// NoPromptForStandby for Standby.
std::string_view render_prompt(StrategyKind kind);

/// Set of roles addressed during one phase of an intervention.
using AddresseePhase = std::vector<ParticipantRole>;

struct CompletionPolicy {
  int max_turns = 6;
  SessionMs idle_timeout_ms = 20000;
};

struct InterventionSpec {
  StrategyKind kind = StrategyKind::Standby;
  BehaviorCode trigger = BehaviorCode::NoStress;
  std::string prompt_template;
  std::vector<AddresseePhase> addressee_plan;
  std::string behavior_script_id;
  CompletionPolicy completion;
};

const InterventionSpec& intervention_spec(StrategyKind kind);

/// Turns allotted per addressee phase: ceil(max_turns / plan length).
int phase_quota(StrategyKind kind, const CompletionPolicy& policy);

/// "Parent", "Child" or "Parent+Child".
std::string addressee_label(const AddresseePhase& phase);

/// Prompt templates loaded from `prompts/<slug>.txt`.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  /// Throws MissingPromptFile naming the first absent file.
  static PromptLibrary load(const std::string& dir);

  /// Throws NoPromptForStandby for Standby.
  const std::string& prompt(StrategyKind kind) const;

 private:
  std::map<StrategyKind, std::string> prompts_;
};

struct ActiveEpisode {
  std::uint64_t episode_id = 0;
  StrategyKind kind = StrategyKind::Standby;
  std::size_t phase_index = 0;
  int turns_taken = 0;
  int turns_in_phase = 0;
  SessionMs started_at = 0;
  /// Last accepted human speech, robot speech end, or episode start.
  SessionMs last_activity = 0;

  bool operator==(const ActiveEpisode&) const = default;
};

struct EpisodeState {
  std::optional<ActiveEpisode> active;
  std::uint64_t episodes_started = 0;

  bool standby() const noexcept { return !active.has_value(); }
  bool operator==(const EpisodeState&) const = default;
};

/// An event produced by a transition; the session stamps seq and ts.
struct EventDraft {
  EventKind kind;
  nlohmann::json payload;
};

enum class EpisodeChange { None, Started, Switched, Ended };

struct EpisodeTransition {
  EpisodeState state;
  std::vector<EventDraft> events;
  EpisodeChange change = EpisodeChange::None;
};

/// The intervention state machine. Pure functions of (state, input, now).
namespace episode {

/// Standby -> Active; Active -> preempt then Active. Triggering Standby
/// ends an active episode and is a warning no-op when already in Standby.
EpisodeTransition trigger(const EpisodeState& state, const TriggerCommand& command, SessionMs now);

/// Operator end (or any forced end). Standby -> warning no-op.
EpisodeTransition end(const EpisodeState& state, SessionMs now, std::string_view reason);

EpisodeTransition on_turn_completed(const EpisodeState& state, SessionMs now,
                                    const CompletionPolicy& policy);

/// Completes the episode when no activity happened for idle_timeout_ms.
/// The idle clock is frozen while the robot is speaking.
EpisodeTransition idle_watchdog(const EpisodeState& state, SessionMs now, bool robot_speaking,
                                const CompletionPolicy& policy);

EpisodeState note_activity(const EpisodeState& state, SessionMs now);

/// Operator override of the addressee phase. Out-of-range or Standby ->
/// warning no-op.
EpisodeTransition reassign_addressee(const EpisodeState& state, std::size_t phase_index);

/// Addressee phase currently in effect, empty in Standby.
AddresseePhase current_addressees(const EpisodeState& state);

}  // namespace episode

}  // namespace coreg
