#include "coreg/intervention.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace coreg {
namespace {

constexpr std::string_view kBreathingPrompt =
    "You are a social robot that supports emotion co-regulation between parents and children, "
    "talking with a parent and a child who got frustrated while playing a time-limited LEGO game. "
    "You can guide the parent and child through deep breathing exercises together. Keep your "
    "answers short, and always end with an action point.";

constexpr std::string_view kPhysicalTouchPrompt =
    "You are a social robot that supports emotion co-regulation between parents and children. "
    "The parent and child are feeling stressed while playing a time-limited LEGO game. Guide the "
    "parent in understanding the benefits of physical touch for their child and encourage the "
    "parent to provide comfort to the child through gentle touch. For the child, invite them to "
    "cheer you up through petting your back using lighthearted jokes and simple, engaging "
    "language. Keep your responses brief and easy to understand.";

constexpr std::string_view kPositiveReinforcementPrompt =
    "You are a social robot designed to support emotion co-regulation between a parent and child "
    "during a time-limited LEGO game. Encourage the parent to use positive reinforcement by "
    "acknowledging the child's progress and efforts. Provide a concrete example to illustrate "
    "effective praise or encouragement. Keep your responses concise, and always end with a "
    "question or actionable suggestion.";

constexpr std::string_view kEmotionValidationPrompt =
    "You are a social robot specialized in supporting emotion co-regulation between parents and "
    "children, the parent and child are experiencing stress during a time-limited LEGO game. (To "
    "the parent) Acknowledge and validate the parent's emotions and efforts in the task. (To the "
    "child) Guide the child to reflect on and recognize their own negative emotions. Keep "
    "responses concise and easy to understand, always ending with a question to encourage further "
    "reflection.";

constexpr std::string_view kRefocusPrompt =
    "You are a social robot specializing in emotion regulation for neurodivergent children. "
    "Engage with a child who has become distracted during a time-limited LEGO challenge with "
    "their parent. Use practical strategies to help them refocus on the game, incorporating light "
    "humor to keep the interaction engaging. Keep responses brief and encouraging.";

using R = ParticipantRole;

std::array<InterventionSpec, 6> make_specs() {
  std::array<InterventionSpec, 6> specs;
  for (std::size_t i = 0; i < kAllStrategies.size(); ++i) {
    auto kind = kAllStrategies[i];
    auto& s = specs[i];
    s.kind = kind;
    s.trigger = trigger_code_for(kind);
    s.behavior_script_id = std::string(strategy_slug(kind));
    switch (kind) {
      case StrategyKind::BreathingExercise:
        s.prompt_template = kBreathingPrompt;
        s.addressee_plan = {{R::Parent, R::Child}};
        break;
      case StrategyKind::PhysicalTouch:
        s.prompt_template = kPhysicalTouchPrompt;
        s.addressee_plan = {{R::Parent}, {R::Child}};
        break;
      case StrategyKind::PositiveReinforcement:
        s.prompt_template = kPositiveReinforcementPrompt;
        s.addressee_plan = {{R::Parent}};
        break;
      case StrategyKind::EmotionValidation:
        s.prompt_template = kEmotionValidationPrompt;
        s.addressee_plan = {{R::Parent}, {R::Child}};
        break;
      case StrategyKind::Refocus:
        s.prompt_template = kRefocusPrompt;
        s.addressee_plan = {{R::Child}};
        break;
      case StrategyKind::Standby:
        break;
    }
  }
  return specs;
}

const std::array<InterventionSpec, 6>& specs() {
  static const auto table = make_specs();
  return table;
}

nlohmann::json note(std::string_view what) { return {{"note", what}}; }

EpisodeTransition complete(const EpisodeState& state, SessionMs now, std::string_view reason) {
  const auto& ep = *state.active;
  EpisodeTransition t{state, {}, EpisodeChange::Ended};
  t.state.active.reset();
  t.events.push_back({EventKind::InterventionCompleted,
                      {{"episode_id", ep.episode_id},
                       {"kind", to_string(ep.kind)},
                       {"reason", reason},
                       {"turns_taken", ep.turns_taken},
                       {"duration_ms", now - ep.started_at}}});
  return t;
}

}  // namespace

std::string_view render_prompt(StrategyKind kind) {
  if (kind == StrategyKind::Standby) throw NoPromptForStandby();
  return intervention_spec(kind).prompt_template;
}

const InterventionSpec& intervention_spec(StrategyKind kind) {
  return specs()[static_cast<std::size_t>(kind)];
}

int phase_quota(StrategyKind kind, const CompletionPolicy& policy) {
  const auto plan = static_cast<int>(intervention_spec(kind).addressee_plan.size());
  if (plan == 0) return policy.max_turns;
  return (policy.max_turns + plan - 1) / plan;
}

std::string addressee_label(const AddresseePhase& phase) {
  std::string out;
  for (auto role : phase) {
    if (!out.empty()) out += '+';
    out += to_string(role);
  }
  return out;
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (auto kind : kActiveStrategies) lib.prompts_[kind] = std::string(render_prompt(kind));
  return lib;
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
  PromptLibrary lib;
  for (auto kind : kActiveStrategies) {
    auto path = (std::filesystem::path(dir) / (std::string(strategy_slug(kind)) + ".txt")).string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingPromptFile(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.prompts_[kind] = buf.str();
  }
  return lib;
}

const std::string& PromptLibrary::prompt(StrategyKind kind) const {
  if (kind == StrategyKind::Standby) throw NoPromptForStandby();
  return prompts_.at(kind);
}

namespace episode {

EpisodeTransition trigger(const EpisodeState& state, const TriggerCommand& command, SessionMs now) {
  const StrategyKind kind = resolve(command);
  if (kind == StrategyKind::Standby) {
    if (state.standby()) {
      auto payload = note("standby_noop");
      payload["command"] = to_string(command);
      return {state, {{EventKind::OperatorNote, payload}}, EpisodeChange::None};
    }
    return end(state, now, "operator_end");
  }

  EpisodeTransition t{state, {}, state.standby() ? EpisodeChange::Started : EpisodeChange::Switched};
  if (state.active) {
    const auto& old = *state.active;
    t.events.push_back({EventKind::InterventionPreempted,
                        {{"episode_id", old.episode_id},
                         {"kind", to_string(old.kind)},
                         {"by", to_string(kind)},
                         {"turns_taken", old.turns_taken}}});
  }
  ActiveEpisode ep;
  ep.episode_id = state.episodes_started + 1;
  ep.kind = kind;
  ep.started_at = now;
  ep.last_activity = now;
  t.state.active = ep;
  t.state.episodes_started = ep.episode_id;
  t.events.push_back({EventKind::InterventionTriggered,
                      {{"episode_id", ep.episode_id},
                       {"kind", to_string(kind)},
                       {"command", to_string(command)},
                       {"addressee", addressee_label(intervention_spec(kind).addressee_plan.at(0))}}});
  return t;
}

EpisodeTransition end(const EpisodeState& state, SessionMs now, std::string_view reason) {
  if (state.standby()) {
    auto payload = note("end_while_standby");
    payload["reason"] = reason;
    return {state, {{EventKind::OperatorNote, payload}}, EpisodeChange::None};
  }
  return complete(state, now, reason);
}

EpisodeTransition on_turn_completed(const EpisodeState& state, SessionMs now,
                                    const CompletionPolicy& policy) {
  if (state.standby()) return {state, {}, EpisodeChange::None};
  EpisodeTransition t{state, {}, EpisodeChange::None};
  auto& ep = *t.state.active;
  ep.turns_taken += 1;
  ep.turns_in_phase += 1;
  ep.last_activity = now;
  if (ep.turns_taken >= policy.max_turns) return complete(t.state, now, "max_turns");

  const auto& plan = intervention_spec(ep.kind).addressee_plan;
  if (ep.turns_in_phase >= phase_quota(ep.kind, policy) && ep.phase_index + 1 < plan.size()) {
    ep.phase_index += 1;
    ep.turns_in_phase = 0;
    auto payload = note("addressee_phase");
    payload["episode_id"] = ep.episode_id;
    payload["phase_index"] = ep.phase_index;
    payload["addressee"] = addressee_label(plan[ep.phase_index]);
    t.events.push_back({EventKind::OperatorNote, payload});
  }
  return t;
}

EpisodeTransition idle_watchdog(const EpisodeState& state, SessionMs now, bool robot_speaking,
                                const CompletionPolicy& policy) {
  if (state.standby() || robot_speaking) return {state, {}, EpisodeChange::None};
  if (now - state.active->last_activity >= policy.idle_timeout_ms) {
    return complete(state, now, "idle_timeout");
  }
  return {state, {}, EpisodeChange::None};
}

EpisodeState note_activity(const EpisodeState& state, SessionMs now) {
  EpisodeState next = state;
  if (next.active && now > next.active->last_activity) next.active->last_activity = now;
  return next;
}

EpisodeTransition reassign_addressee(const EpisodeState& state, std::size_t phase_index) {
  if (state.standby()) {
    return {state, {{EventKind::OperatorNote, note("reassign_while_standby")}}, EpisodeChange::None};
  }
  const auto& plan = intervention_spec(state.active->kind).addressee_plan;
  if (phase_index >= plan.size()) {
    auto payload = note("reassign_out_of_range");
    payload["phase_index"] = phase_index;
    return {state, {{EventKind::OperatorNote, payload}}, EpisodeChange::None};
  }
  EpisodeTransition t{state, {}, EpisodeChange::None};
  t.state.active->phase_index = phase_index;
  t.state.active->turns_in_phase = 0;
  auto payload = note("addressee_reassigned");
  payload["episode_id"] = state.active->episode_id;
  payload["phase_index"] = phase_index;
  payload["addressee"] = addressee_label(plan[phase_index]);
  t.events.push_back({EventKind::OperatorNote, payload});
  return t;
}

AddresseePhase current_addressees(const EpisodeState& state) {
  if (state.standby()) return {};
  return intervention_spec(state.active->kind).addressee_plan.at(state.active->phase_index);
}

}  // namespace episode
}  // namespace coreg
