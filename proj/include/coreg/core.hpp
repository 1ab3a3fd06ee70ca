#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace coreg {

/// Session-relative time in integer milliseconds. No floating-point clocks.
using SessionMs = std::int64_t;

enum class ParticipantRole { Parent, Child, Robot, Operator };

/// Who produced a transcript entry. Unknown is a normal value: the speech
/// front end has no diarization, so most human speech arrives unattributed.
enum class Speaker { Parent, Child, Robot, Unknown };

/// Observable dyad behaviors an operator can report. Closed set, one per
/// row of the trigger table.
enum class BehaviorCode {
  NegativeStressfulInteraction,
  NegativeStressfulPhysicalInteraction,
  ChildObstacleOrProgress,
  NegativeThoughtsOrRegulationDifficulty,
  ChildCannotFocus,
  NoStress,
};

enum class StrategyKind {
  BreathingExercise,
  PhysicalTouch,
  PositiveReinforcement,
  EmotionValidation,
  Refocus,
  Standby,
};

inline constexpr std::array kAllBehaviorCodes{
    BehaviorCode::NegativeStressfulInteraction,
    BehaviorCode::NegativeStressfulPhysicalInteraction,
    BehaviorCode::ChildObstacleOrProgress,
    BehaviorCode::NegativeThoughtsOrRegulationDifficulty,
    BehaviorCode::ChildCannotFocus,
    BehaviorCode::NoStress,
};

inline constexpr std::array kAllStrategies{
    StrategyKind::BreathingExercise,     StrategyKind::PhysicalTouch,
    StrategyKind::PositiveReinforcement, StrategyKind::EmotionValidation,
    StrategyKind::Refocus,               StrategyKind::Standby,
};

/// The five strategies that own an LLM prompt.
inline constexpr std::array kActiveStrategies{
    StrategyKind::BreathingExercise, StrategyKind::PhysicalTouch,
    StrategyKind::PositiveReinforcement, StrategyKind::EmotionValidation,
    StrategyKind::Refocus,
};

/// Operator trigger: either a strategy directly or an observed behavior
/// that resolves to one.
using TriggerCommand = std::variant<StrategyKind, BehaviorCode>;

StrategyKind map_behavior_to_strategy(BehaviorCode code) noexcept;

/// Inverse of map_behavior_to_strategy (the mapping is one-to-one).
BehaviorCode trigger_code_for(StrategyKind kind) noexcept;

StrategyKind resolve(const TriggerCommand& command) noexcept;

std::string_view to_string(ParticipantRole role) noexcept;
std::string_view to_string(Speaker speaker) noexcept;
std::string_view to_string(BehaviorCode code) noexcept;
std::string_view to_string(StrategyKind kind) noexcept;
std::string to_string(const TriggerCommand& command);

std::optional<ParticipantRole> parse_participant_role(std::string_view text) noexcept;
std::optional<Speaker> parse_speaker(std::string_view text) noexcept;
std::optional<BehaviorCode> parse_behavior_code(std::string_view text) noexcept;
std::optional<StrategyKind> parse_strategy(std::string_view text) noexcept;
/// Accepts a strategy name or a behavior-code name.
std::optional<TriggerCommand> parse_trigger_command(std::string_view text) noexcept;

/// Row label of the trigger table, e.g. "The child cannot focus on the task".
std::string_view behavior_label(BehaviorCode code) noexcept;
std::string_view strategy_label(StrategyKind kind) noexcept;
/// File-name stem used for fixtures: "breathing_exercise", "refocus", ...
std::string_view strategy_slug(StrategyKind kind) noexcept;

}  // namespace coreg
