#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "coreg/codec.hpp"
#include "coreg/intervention.hpp"
#include "oracles.hpp"

using namespace coreg;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool has_event(const EpisodeTransition& t, EventKind kind) {
  for (const auto& e : t.events) {
    if (e.kind == kind) return true;
  }
  return false;
}

}  // namespace

TEST(Prompts, ByteIdenticalToFixture) {
  const auto fixture = oracle::trigger_table_fixture();
  for (const auto& row : fixture.at("rows")) {
    const auto kind = *parse_strategy(row.at("strategy").get<std::string>());
    if (row.at("prompt").is_null()) {
      EXPECT_THROW(render_prompt(kind), NoPromptForStandby);
      continue;
    }
    const auto expected = row.at("prompt").get<std::string>();
    EXPECT_EQ(render_prompt(kind), expected) << to_string(kind);
    EXPECT_EQ(intervention_spec(kind).prompt_template, expected);
  }
}

TEST(Prompts, ShippedFilesMatchFixture) {
  const auto fixture = oracle::trigger_table_fixture();
  for (const auto& row : fixture.at("rows")) {
    if (row.at("prompt").is_null()) continue;
    const auto kind = *parse_strategy(row.at("strategy").get<std::string>());
    const auto path = oracle::data_dir() + "/prompts/" + std::string(strategy_slug(kind)) + ".txt";
    EXPECT_EQ(sha256_hex(read_file(path)), sha256_hex(row.at("prompt").get<std::string>())) << path;
  }
}

TEST(Prompts, NamedPhrases) {
  EXPECT_NE(render_prompt(StrategyKind::PhysicalTouch).find("cheer you up through petting your back"), std::string::npos);
  EXPECT_NE(render_prompt(StrategyKind::PositiveReinforcement)
                .find("use positive reinforcement by acknowledging the child's progress"),
            std::string::npos);
}

TEST(Prompts, LibraryLoadNamesMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "coreg_prompts_missing";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "breathing_exercise.txt") << render_prompt(StrategyKind::BreathingExercise);
  try {
    PromptLibrary::load(dir.string());
    FAIL();
  } catch (const MissingPromptFile& e) {
    EXPECT_NE(e.path().find("physical_touch.txt"), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST(Specs, AddresseePlans) {
  using P = ParticipantRole;
  EXPECT_TRUE(intervention_spec(StrategyKind::Standby).addressee_plan.empty());
  EXPECT_TRUE(intervention_spec(StrategyKind::Standby).prompt_template.empty());
  EXPECT_EQ(intervention_spec(StrategyKind::PhysicalTouch).addressee_plan,
            (std::vector<AddresseePhase>{{P::Parent}, {P::Child}}));
  EXPECT_EQ(intervention_spec(StrategyKind::EmotionValidation).addressee_plan,
            (std::vector<AddresseePhase>{{P::Parent}, {P::Child}}));
  EXPECT_EQ(intervention_spec(StrategyKind::PositiveReinforcement).addressee_plan,
            (std::vector<AddresseePhase>{{P::Parent}}));
  EXPECT_EQ(intervention_spec(StrategyKind::Refocus).addressee_plan, (std::vector<AddresseePhase>{{P::Child}}));
  EXPECT_EQ(intervention_spec(StrategyKind::BreathingExercise).addressee_plan,
            (std::vector<AddresseePhase>{{P::Parent, P::Child}}));
  for (auto k : kAllStrategies) EXPECT_EQ(intervention_spec(k).trigger, trigger_code_for(k));
}

TEST(Specs, PhaseQuota) {
  CompletionPolicy p;
  EXPECT_EQ(phase_quota(StrategyKind::PhysicalTouch, p), 3);
  EXPECT_EQ(phase_quota(StrategyKind::Refocus, p), 6);
  p.max_turns = 5;
  EXPECT_EQ(phase_quota(StrategyKind::EmotionValidation, p), 3);
}

TEST(Episode, TriggerFromStandby) {
  auto t = episode::trigger({}, StrategyKind::BreathingExercise, 100);
  ASSERT_TRUE(t.state.active);
  EXPECT_EQ(t.change, EpisodeChange::Started);
  EXPECT_EQ(t.state.active->kind, StrategyKind::BreathingExercise);
  EXPECT_EQ(t.state.active->phase_index, 0u);
  EXPECT_EQ(t.state.active->started_at, 100);
  EXPECT_TRUE(has_event(t, EventKind::InterventionTriggered));
}

TEST(Episode, TriggerByBehaviorCode) {
  auto t = episode::trigger({}, BehaviorCode::NegativeStressfulPhysicalInteraction, 0);
  EXPECT_EQ(t.state.active->kind, StrategyKind::PhysicalTouch);
}

TEST(Episode, PreemptionIsImmediate) {
  auto a = episode::trigger({}, StrategyKind::BreathingExercise, 0);
  a = episode::on_turn_completed(a.state, 10, {});
  auto b = episode::trigger(a.state, StrategyKind::Refocus, 20);
  EXPECT_EQ(b.change, EpisodeChange::Switched);
  ASSERT_EQ(b.events.size(), 2u);
  EXPECT_EQ(b.events[0].kind, EventKind::InterventionPreempted);
  EXPECT_EQ(b.events[1].kind, EventKind::InterventionTriggered);
  EXPECT_EQ(b.state.active->kind, StrategyKind::Refocus);
  EXPECT_EQ(b.state.active->turns_taken, 0);
  EXPECT_EQ(b.state.active->phase_index, 0u);
  EXPECT_EQ(b.state.active->episode_id, 2u);
}

TEST(Episode, StandbyTriggerWhileStandbyWarns) {
  auto t = episode::trigger({}, StrategyKind::Standby, 0);
  EXPECT_TRUE(t.state.standby());
  EXPECT_EQ(t.change, EpisodeChange::None);
  ASSERT_EQ(t.events.size(), 1u);
  EXPECT_EQ(t.events[0].kind, EventKind::OperatorNote);
}

TEST(Episode, StandbyTriggerEndsActive) {
  auto a = episode::trigger({}, StrategyKind::Refocus, 0);
  auto b = episode::trigger(a.state, BehaviorCode::NoStress, 5);
  EXPECT_TRUE(b.state.standby());
  EXPECT_EQ(b.change, EpisodeChange::Ended);
}

TEST(Episode, MaxTurnsCompletes) {
  auto t = episode::trigger({}, StrategyKind::Refocus, 0);
  for (int i = 0; i < 5; ++i) t = episode::on_turn_completed(t.state, i, {});
  EXPECT_EQ(t.state.active->turns_taken, 5);
  t = episode::on_turn_completed(t.state, 6, {});
  EXPECT_TRUE(t.state.standby());
  EXPECT_EQ(t.change, EpisodeChange::Ended);
  ASSERT_TRUE(has_event(t, EventKind::InterventionCompleted));
  EXPECT_EQ(t.events.back().payload.at("reason"), "max_turns");
}

TEST(Episode, PhaseAdvancesAtQuota) {
  auto t = episode::trigger({}, StrategyKind::PhysicalTouch, 0);
  EXPECT_EQ(episode::current_addressees(t.state), AddresseePhase{ParticipantRole::Parent});
  for (int i = 0; i < 3; ++i) t = episode::on_turn_completed(t.state, i, {});
  EXPECT_EQ(t.state.active->phase_index, 1u);
  EXPECT_EQ(episode::current_addressees(t.state), AddresseePhase{ParticipantRole::Child});
}

TEST(Episode, OperatorEnd) {
  auto t = episode::trigger({}, StrategyKind::EmotionValidation, 0);
  t = episode::end(t.state, 50, "operator_end");
  EXPECT_TRUE(t.state.standby());
  EXPECT_EQ(t.change, EpisodeChange::Ended);
  auto again = episode::end(t.state, 60, "operator_end");
  EXPECT_EQ(again.change, EpisodeChange::None);
  EXPECT_EQ(again.events.at(0).kind, EventKind::OperatorNote);
}

TEST(Episode, IdleWatchdog) {
  CompletionPolicy p;
  auto t = episode::trigger({}, StrategyKind::Refocus, 0);
  EXPECT_EQ(episode::idle_watchdog(t.state, 5000, false, p).change, EpisodeChange::None);
  EXPECT_EQ(episode::idle_watchdog(t.state, 25000, false, p).change, EpisodeChange::Ended);
  EXPECT_EQ(episode::idle_watchdog(t.state, 30000, true, p).change, EpisodeChange::None);
  auto s = episode::note_activity(t.state, 20000);
  EXPECT_EQ(episode::idle_watchdog(s, 25000, false, p).change, EpisodeChange::None);
}

TEST(Episode, Reassign) {
  auto t = episode::trigger({}, StrategyKind::PhysicalTouch, 0);
  auto r = episode::reassign_addressee(t.state, 1);
  EXPECT_EQ(r.state.active->phase_index, 1u);
  auto bad = episode::reassign_addressee(t.state, 2);
  EXPECT_EQ(bad.state, t.state);
  EXPECT_EQ(bad.events.at(0).payload.at("note"), "reassign_out_of_range");
  EXPECT_EQ(episode::reassign_addressee({}, 0).events.at(0).payload.at("note"), "reassign_while_standby");
}
