#include "coreg/core.hpp"

namespace coreg {

StrategyKind map_behavior_to_strategy(BehaviorCode code) noexcept {
  switch (code) {
    case BehaviorCode::NegativeStressfulInteraction:
      return StrategyKind::BreathingExercise;
    case BehaviorCode::NegativeStressfulPhysicalInteraction:
      return StrategyKind::PhysicalTouch;
    case BehaviorCode::ChildObstacleOrProgress:
      return StrategyKind::PositiveReinforcement;
    case BehaviorCode::NegativeThoughtsOrRegulationDifficulty:
      return StrategyKind::EmotionValidation;
    case BehaviorCode::ChildCannotFocus:
      return StrategyKind::Refocus;
    case BehaviorCode::NoStress:
      return StrategyKind::Standby;
  }
  return StrategyKind::Standby;
}

BehaviorCode trigger_code_for(StrategyKind kind) noexcept {
  for (auto code : kAllBehaviorCodes) {
    if (map_behavior_to_strategy(code) == kind) return code;
  }
  return BehaviorCode::NoStress;
}

StrategyKind resolve(const TriggerCommand& command) noexcept {
  if (const auto* kind = std::get_if<StrategyKind>(&command)) return *kind;
  return map_behavior_to_strategy(std::get<BehaviorCode>(command));
}

std::string_view to_string(ParticipantRole role) noexcept {
  switch (role) {
    case ParticipantRole::Parent: return "Parent";
    case ParticipantRole::Child: return "Child";
    case ParticipantRole::Robot: return "Robot";
    case ParticipantRole::Operator: return "Operator";
  }
  return "?";
}

std::string_view to_string(Speaker speaker) noexcept {
  switch (speaker) {
    case Speaker::Parent: return "Parent";
    case Speaker::Child: return "Child";
    case Speaker::Robot: return "Robot";
    case Speaker::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(BehaviorCode code) noexcept {
  switch (code) {
    case BehaviorCode::NegativeStressfulInteraction: return "NegativeStressfulInteraction";
    case BehaviorCode::NegativeStressfulPhysicalInteraction: return "NegativeStressfulPhysicalInteraction";
    case BehaviorCode::ChildObstacleOrProgress: return "ChildObstacleOrProgress";
    case BehaviorCode::NegativeThoughtsOrRegulationDifficulty: return "NegativeThoughtsOrRegulationDifficulty";
    case BehaviorCode::ChildCannotFocus: return "ChildCannotFocus";
    case BehaviorCode::NoStress: return "NoStress";
  }
  return "?";
}

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::BreathingExercise: return "BreathingExercise";
    case StrategyKind::PhysicalTouch: return "PhysicalTouch";
    case StrategyKind::PositiveReinforcement: return "PositiveReinforcement";
    case StrategyKind::EmotionValidation: return "EmotionValidation";
    case StrategyKind::Refocus: return "Refocus";
    case StrategyKind::Standby: return "Standby";
  }
  return "?";
}

std::string to_string(const TriggerCommand& command) {
  return std::visit([](auto value) { return std::string(to_string(value)); }, command);
}

std::optional<ParticipantRole> parse_participant_role(std::string_view text) noexcept {
  for (auto role : {ParticipantRole::Parent, ParticipantRole::Child, ParticipantRole::Robot,
                    ParticipantRole::Operator}) {
    if (to_string(role) == text) return role;
  }
  return std::nullopt;
}

std::optional<Speaker> parse_speaker(std::string_view text) noexcept {
  for (auto s : {Speaker::Parent, Speaker::Child, Speaker::Robot, Speaker::Unknown}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<BehaviorCode> parse_behavior_code(std::string_view text) noexcept {
  for (auto code : kAllBehaviorCodes) {
    if (to_string(code) == text) return code;
  }
  return std::nullopt;
}

std::optional<StrategyKind> parse_strategy(std::string_view text) noexcept {
  for (auto kind : kAllStrategies) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::optional<TriggerCommand> parse_trigger_command(std::string_view text) noexcept {
  if (auto kind = parse_strategy(text)) return TriggerCommand{*kind};
  if (auto code = parse_behavior_code(text)) return TriggerCommand{*code};
  return std::nullopt;
}

std::string_view behavior_label(BehaviorCode code) noexcept {
  switch (code) {
    case BehaviorCode::NegativeStressfulInteraction:
      return "Negative and stressful interactions within parent-child dyads";
    case BehaviorCode::NegativeStressfulPhysicalInteraction:
      return "Negative and stressful physical interactions within parent-child dyads";
    case BehaviorCode::ChildObstacleOrProgress:
      return "The child encounters obstacles or makes progress";
    case BehaviorCode::NegativeThoughtsOrRegulationDifficulty:
      return "The parent or child expresses negative thoughts or the parent faces challenges "
             "in regulating their own stress or that of their child";
    case BehaviorCode::ChildCannotFocus:
      return "The child cannot focus on the task";
    case BehaviorCode::NoStress:
      return "No stress or negative emotion in the dyad";
  }
  return "?";
}

std::string_view strategy_label(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::BreathingExercise: return "Breathing exercises";
    case StrategyKind::PhysicalTouch: return "Physical touch";
    case StrategyKind::PositiveReinforcement: return "Encourage positive reinforcement";
    case StrategyKind::EmotionValidation: return "Emotion validation";
    case StrategyKind::Refocus: return "Refocus";
    case StrategyKind::Standby: return "Standby mode";
  }
  return "?";
}

std::string_view strategy_slug(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::BreathingExercise: return "breathing_exercise";
    case StrategyKind::PhysicalTouch: return "physical_touch";
    case StrategyKind::PositiveReinforcement: return "positive_reinforcement";
    case StrategyKind::EmotionValidation: return "emotion_validation";
    case StrategyKind::Refocus: return "refocus";
    case StrategyKind::Standby: return "standby";
  }
  return "?";
}

}  // namespace coreg
