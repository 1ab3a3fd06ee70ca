#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coreg/behavior.hpp"
#include "oracles.hpp"

using namespace coreg;
using namespace coreg::behavior;

namespace {

struct Run {
  std::vector<ActuatorCommand> commands;
  PhaseState state;
};

Run run_to(const BehaviorScript& s, PhaseState st, SessionMs until, std::deque<Stimulus> stim = {}) {
  auto r = tick(s, st, until, stim);
  return {r.commands, r.state};
}

}  // namespace

TEST(Breathing, PhaseValues) {
  auto a = breathing_phase(0, 6000);
  EXPECT_DOUBLE_EQ(a.head_pitch, 0.5);
  auto b = breathing_phase(1500, 6000);
  EXPECT_DOUBLE_EQ(b.head_pitch, 1.0);
  EXPECT_DOUBLE_EQ(b.light, 1.0);
  EXPECT_NEAR(breathing_phase(3000, 6000).head_pitch, 0.5, 1e-12);
  for (SessionMs t = 0; t < 20000; t += 37) {
    auto p = breathing_phase(t, 6000);
    EXPECT_EQ(p.head_pitch, p.light);
  }
}

TEST(Breathing, ScriptIsPeriodic) {
  auto s = compile_script(StrategyKind::BreathingExercise);
  auto r = run_to(s, initial_state(s), 12000);
  std::map<SessionMs, double> pitch;
  std::map<SessionMs, double> light;
  for (const auto& c : r.commands) {
    if (c.channel == Channel::HeadPitch) pitch[c.at_ms] = c.value;
    if (c.channel == Channel::BackLight) light[c.at_ms] = c.value;
  }
  ASSERT_TRUE(pitch.count(0) && pitch.count(6000));
  EXPECT_DOUBLE_EQ(pitch[0], pitch[6000]);
  EXPECT_EQ(pitch, light);
}

TEST(PhysicalTouch, SadUntilTouched) {
  auto s = compile_script(StrategyKind::PhysicalTouch);
  auto r = run_to(s, initial_state(s), 10000);
  EXPECT_EQ(r.state.phase, "sad");
  bool eyelid_half = false;
  for (const auto& c : r.commands) eyelid_half = eyelid_half || (c.channel == Channel::EyelidOpenness && c.value == 0.5);
  EXPECT_TRUE(eyelid_half);

  std::deque<Stimulus> q{Stimulus::from_sensor(SensorEvent::touch(TouchRegion::Back))};
  auto t = tick(s, r.state, 10500, q);
  EXPECT_EQ(t.state.phase, "enjoyment");
  EXPECT_EQ(t.state.phase_start, 10500);
  EXPECT_EQ(t.entered_phases, std::vector<std::string>{"enjoyment"});
  EXPECT_TRUE(q.empty());
}

TEST(EmotionValidation, FaceBearingMapsToYaw) {
  auto s = compile_script(StrategyKind::EmotionValidation);
  auto st = run_to(s, initial_state(s), 1000).state;
  std::deque<Stimulus> q{Stimulus::from_sensor(SensorEvent::face(30.0))};
  auto t = tick(s, st, 1200, q);
  EXPECT_EQ(t.state.phase, "gaze_hold");
  bool found = false;
  for (const auto& c : t.commands) {
    if (c.channel == Channel::HeadYaw) {
      EXPECT_NEAR(c.value, 30.0 / 90.0, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(SensorEvent::face(120.0), std::invalid_argument);
}

TEST(Standby, SilentAfterClosing) {
  auto s = compile_script(StrategyKind::Standby);
  auto r = run_to(s, initial_state(s), 3000);
  EXPECT_FALSE(r.commands.empty());
  auto later = run_to(s, r.state, 60000);
  EXPECT_TRUE(later.commands.empty());
  EXPECT_TRUE(later.state.finished);
}

TEST(Tick, HalfOpenInterval) {
  auto s = compile_script(StrategyKind::Refocus);
  auto a = run_to(s, initial_state(s), 2000);
  auto b = run_to(s, a.state, 2000);
  EXPECT_TRUE(b.commands.empty());
}

TEST(Tick, OneTransitionPerTick) {
  auto s = compile_script(StrategyKind::EmotionValidation);
  std::deque<Stimulus> q{Stimulus::from_sensor(SensorEvent::face(10.0)),
                         Stimulus::from_sensor(SensorEvent::face_lost())};
  auto t = tick(s, initial_state(s), 100, q);
  EXPECT_EQ(t.state.phase, "gaze_hold");
  ASSERT_EQ(q.size(), 1u);
  auto u = tick(s, t.state, 200, q);
  EXPECT_EQ(u.state.phase, "scan");
}

TEST(Scripts, CompiledScriptsAreSound) {
  for (auto k : kAllStrategies) {
    auto s = compile_script(k);
    EXPECT_TRUE(validate_script(s).empty()) << s.id;
    EXPECT_EQ(script_from_json(script_to_json(s)), s);
  }
}

TEST(Scripts, CyclicFixtureRejectedWithPhaseNames) {
  auto s = load_script_file(oracle::fixture_dir() + "/cyclic_behavior.json");
  auto problems = validate_script(s);
  ASSERT_FALSE(problems.empty());
  EXPECT_NE(problems[0].find("raise"), std::string::npos);
  EXPECT_NE(problems[0].find("blink"), std::string::npos);
  EXPECT_NE(problems[0].find("nod"), std::string::npos);
}

TEST(Scripts, UnknownPhaseReferenceRejected) {
  auto s = compile_script(StrategyKind::PhysicalTouch);
  s.transitions.push_back({"sad", TriggerKind::Face, "dance"});
  EXPECT_FALSE(validate_script(s).empty());
}

TEST(Scripts, SchemaErrors) {
  EXPECT_THROW(script_from_json(nlohmann::json::parse(R"({"id":"x"})")), ScriptFormatError);
}

TEST(Fuzz, RangeSafetyAndDeterminism) {
  std::mt19937 rng(5);
  for (auto k : kAllStrategies) {
    auto s = compile_script(k);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::pair<SessionMs, Stimulus>> trace;
      SessionMs t = 0;
      for (int i = 0; i < 30; ++i) {
        t += std::uniform_int_distribution<SessionMs>(0, 900)(rng);
        Stimulus st;
        switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
          case 0: st = Stimulus::from_sensor(SensorEvent::touch(TouchRegion::Head)); break;
          case 1: st = Stimulus::from_sensor(SensorEvent::face(std::uniform_real_distribution<double>(-90, 90)(rng))); break;
          case 2: st = Stimulus::from_sensor(SensorEvent::face_lost()); break;
          case 3: st.kind = TriggerKind::EpisodeEnd; break;
          default: continue;
        }
        trace.push_back({t, st});
      }
      auto play = [&] {
        std::vector<ActuatorCommand> out;
        PhaseState state = initial_state(s);
        std::deque<Stimulus> q;
        for (const auto& [at, st] : trace) {
          q.push_back(st);
          auto r = tick(s, state, at, q);
          state = r.state;
          out.insert(out.end(), r.commands.begin(), r.commands.end());
        }
        return out;
      };
      auto first = play();
      EXPECT_EQ(first, play());
      for (const auto& c : first) {
        auto [lo, hi] = channel_range(c.channel);
        ASSERT_GE(c.value, lo);
        ASSERT_LE(c.value, hi);
      }
    }
  }
}
