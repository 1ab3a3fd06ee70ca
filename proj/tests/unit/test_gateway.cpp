#include <gtest/gtest.h>

#include <mutex>
#include <sstream>
#include <random>

#include "coreg/gateway/hub.hpp"
#include "coreg/gateway/protocol.hpp"
#include "coreg/gateway/robot.hpp"
#include "coreg/gateway/ws.hpp"
#include "coreg/mocks.hpp"
#include "generators.hpp"
#include "live_rig.hpp"

using namespace coreg;
using namespace coreg::gateway;
using namespace std::chrono_literals;

namespace {

class FakeOutbox final : public Outbox {
 public:
  void send(std::string frame) override {
    std::lock_guard lock(mu_);
    frames_.push_back(decode(frame));
  }
  void close() override {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  std::vector<Envelope> frames() const {
    std::lock_guard lock(mu_);
    return frames_;
  }
  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }
  const msg::Error* last_error() const {
    std::lock_guard lock(mu_);
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      if (auto* e = std::get_if<msg::Error>(&it->message)) return e;
    }
    return nullptr;
  }

 private:
  mutable std::mutex mu_;
  std::vector<Envelope> frames_;
  bool closed_ = false;
};

struct HubRig {
  std::shared_ptr<pipeline::Pipeline> pipe = std::make_shared<pipeline::Pipeline>(
      std::make_shared<pipeline::ScriptedAsr>(), std::make_shared<pipeline::EchoLlm>(),
      std::make_shared<pipeline::SyntheticTts>());
  LiveSession live{std::make_unique<SessionEngine>(SessionConfig{}, pipe), pipe, {}};
  Hub hub{live};
  std::shared_ptr<FakeOutbox> out = std::make_shared<FakeOutbox>();
  ConnectionId id = hub.attach(out);

  void send(Message m, std::uint64_t seq) { hub.on_frame(id, encode({kProtocolVersion, seq, 0, std::move(m)})); }
};

}  // namespace

TEST(Protocol, RoundTripEveryKind) {
  std::mt19937 rng(42);
  for (auto kind : kAllMessageKinds) {
    for (int i = 0; i < 50; ++i) {
      auto env = oracle::random_envelope(rng, kind);
      const auto wire = encode(env);
      ASSERT_EQ(wire.find('\n'), std::string::npos);
      ASSERT_EQ(decode(wire), env) << wire;
      ASSERT_EQ(env.kind(), kind);
    }
  }
}

TEST(Protocol, TypeNames) {
  for (auto kind : kAllMessageKinds) EXPECT_EQ(parse_type_name(type_name(kind)), kind);
  EXPECT_EQ(type_name(MessageKind::InterventionCommand), "intervention_command");
  EXPECT_FALSE(parse_type_name("teleport"));
}

TEST(Protocol, AudioIsLittleEndianBase64) {
  Envelope env{kProtocolVersion, 1, 0, msg::AudioChunk{0, {1, -2}}};
  auto j = nlohmann::json::parse(encode(env));
  EXPECT_EQ(j.at("payload").at("pcm_b64"), "AQD+/w==");
}

TEST(Protocol, DecodeErrors) {
  auto code_of = [](std::string_view text) {
    try {
      decode(text);
    } catch (const DecodeError& e) {
      return e.code();
    }
    return std::string("none");
  };
  EXPECT_EQ(code_of("not json"), "bad_message");
  EXPECT_EQ(code_of(R"({"v":1,"seq":1,"ts":0,"type":"warp","payload":{}})"), "bad_message");
  EXPECT_EQ(code_of(R"({"v":2,"seq":1,"ts":0,"type":"speak_done","payload":{}})"), "bad_version");
  EXPECT_EQ(code_of(R"({"v":1,"seq":1,"ts":0,"type":"hello","payload":{"role":"Dragon"}})"), "bad_message");
  EXPECT_EQ(code_of(R"({"v":1,"seq":1,"ts":0,"type":"speak_done","payload":{}})"), "none");
}

TEST(Protocol, PermissionMatrix) {
  for (auto role : {ParticipantRole::Operator, ParticipantRole::Robot, ParticipantRole::Parent, ParticipantRole::Child}) {
    for (auto kind : kAllMessageKinds) {
      EXPECT_EQ(authorize(role, kind), oracle::expected_permission(role, kind))
          << to_string(role) << " " << type_name(kind);
    }
  }
}

TEST(Hub, FirstMessageMustBeHello) {
  HubRig r;
  r.send(msg::PhaseCommand{}, 1);
  ASSERT_NE(r.out->last_error(), nullptr);
  EXPECT_EQ(r.out->last_error()->code, "no_hello");
  EXPECT_TRUE(r.out->closed());
}

TEST(Hub, HelloAcksAndOperatorGetsState) {
  HubRig r;
  r.send(msg::Hello{ParticipantRole::Operator}, 1);
  auto f = r.out->frames();
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(std::get<msg::Ack>(f[0].message).seq, 1u);
  EXPECT_EQ(f[1].kind(), MessageKind::StateUpdate);
  EXPECT_EQ(f[2].kind(), MessageKind::TimerUpdate);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i].seq, i + 1);
}

TEST(Hub, SequenceGap) {
  HubRig r;
  r.send(msg::Hello{ParticipantRole::Robot}, 1);
  r.send(msg::SpeakDone{}, 3);
  ASSERT_NE(r.out->last_error(), nullptr);
  EXPECT_EQ(r.out->last_error()->code, "bad_seq");
  EXPECT_FALSE(r.out->closed());
}

TEST(Hub, RoleGate) {
  HubRig r;
  r.send(msg::Hello{ParticipantRole::Robot}, 1);
  r.send(msg::InterventionCommand{msg::InterventionCommand::Action::End, std::nullopt, 0}, 2);
  EXPECT_EQ(r.out->last_error()->code, "forbidden");
  r.send(msg::Hello{ParticipantRole::Robot}, 3);
  EXPECT_EQ(r.out->last_error()->code, "duplicate_hello");
}

TEST(Hub, ParticipantRolesCannotConnect) {
  HubRig r;
  r.send(msg::Hello{ParticipantRole::Child}, 1);
  EXPECT_EQ(r.out->last_error()->code, "forbidden");
  EXPECT_FALSE(r.out->closed());
}

TEST(Hub, BadFrameKeepsConnection) {
  HubRig r;
  r.hub.on_frame(r.id, "{{{");
  EXPECT_EQ(r.out->last_error()->code, "bad_message");
  r.send(msg::Hello{ParticipantRole::Robot}, 1);
  EXPECT_EQ(r.out->frames().back().kind(), MessageKind::Ack);
}

TEST(Hub, PublishSkipsUnhelloed) {
  HubRig r;
  auto other = std::make_shared<FakeOutbox>();
  r.hub.attach(other);
  r.send(msg::Hello{ParticipantRole::Robot}, 1);
  r.hub.publish(msg::SpeakDone{}, ParticipantRole::Robot);
  r.hub.publish(msg::SpeakDone{}, ParticipantRole::Operator);
  EXPECT_EQ(r.out->frames().size(), 2u);
  EXPECT_TRUE(other->frames().empty());
}

TEST(Ws, QueryParam) {
  EXPECT_EQ(query_param("/ws?token=a%20b&x=1", "token"), "a b");
  EXPECT_EQ(query_param("/ws?x=1", "token"), std::nullopt);
}

TEST(Ws, RejectsBadTokenAndPath) {
  oracle::LiveRig rig;
  WsClient c;
  EXPECT_THROW(c.connect("127.0.0.1", rig.port(), "/ws?token=wrong"), ConnectError);
  WsClient d;
  EXPECT_THROW(d.connect("127.0.0.1", rig.port(), "/elsewhere?token=secret"), ConnectError);
  WsClient e;
  EXPECT_NO_THROW(e.connect("127.0.0.1", rig.port(), "/ws?token=secret"));
}

TEST(Ws, TouchDuringPhysicalTouchTurnsToEnjoyment) {
  oracle::LiveRig rig;
  auto op = rig.join(ParticipantRole::Operator);
  auto robot = rig.join(ParticipantRole::Robot);

  auto ack_for = [](WsClient& c, std::uint64_t seq) {
    for (int i = 0; i < 50; ++i) {
      auto env = c.receive(2s);
      if (!env) return false;
      if (auto* a = std::get_if<msg::Ack>(&env->message); a && a->seq == seq) return true;
      if (auto* e = std::get_if<msg::Error>(&env->message)) ADD_FAILURE() << e->code << ": " << e->detail;
    }
    return false;
  };
  ASSERT_TRUE(ack_for(*op, op->send(msg::PhaseCommand{})));
  ASSERT_TRUE(ack_for(*op, op->send(msg::InterventionCommand{msg::InterventionCommand::Action::Trigger,
                                                             TriggerCommand{BehaviorCode::NegativeStressfulPhysicalInteraction}, 0})));
  ASSERT_TRUE(ack_for(*robot, robot->send(msg::SensorEventMsg{behavior::SensorEvent::touch(behavior::TouchRegion::Back)})));

  bool enjoyment = false;
  for (int i = 0; i < 200 && !enjoyment; ++i) {
    auto env = robot->receive_kind(MessageKind::BehaviorCommandBatch, 3s);
    if (!env) break;
    enjoyment = std::get<msg::BehaviorCommandBatch>(env->message).phase == "enjoyment";
  }
  EXPECT_TRUE(enjoyment);
}

namespace {

struct RobotRun {
  std::vector<SessionEvent> events;
  std::vector<SessionMs> sensor_ts;
  RobotStats stats;
};

RobotRun run_robot_at(double scale, const std::vector<ScheduledSensor>& schedule) {
  SessionConfig cfg;
  cfg.budget_ms = 3'600'000;
  oracle::LiveRig rig("secret", scale, cfg);
  auto op = rig.join(ParticipantRole::Operator);
  const auto seq = op->send(msg::PhaseCommand{});
  for (int i = 0; i < 50; ++i) {
    auto env = op->receive_kind(MessageKind::Ack, 2s);
    if (!env || std::get<msg::Ack>(env->message).seq == seq) break;
  }
  RobotOptions o;
  o.port = rig.port();
  o.token = rig.token();
  o.compression = scale;
  o.linger = 50ms;
  RobotRun run;
  run.stats = run_simulated_robot(schedule, o);
  for (const auto& e : rig.live().events()) {
    run.events.push_back(e);
    if (e.kind == EventKind::SensorFired) run.sensor_ts.push_back(e.ts);
  }
  std::size_t last = 0;
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    if (run.events[i].kind == EventKind::SensorFired) last = i;
  }
  run.events.resize(last + 1);
  run.events = mask_timestamps(run.events);
  return run;
}

}  // namespace

TEST(Robot, CompressedScheduleKeepsLogContent) {
  std::vector<ScheduledSensor> schedule;
  for (int i = 1; i <= 14; ++i) {
    behavior::SensorEvent ev = i % 3 == 0   ? behavior::SensorEvent::face_lost()
                               : i % 3 == 1 ? behavior::SensorEvent::touch(behavior::TouchRegion::Back)
                                            : behavior::SensorEvent::face(-15.0 + i);
    schedule.push_back({i * 62'000, ev});
  }
  auto slow = run_robot_at(100.0, schedule);
  auto fast = run_robot_at(1000.0, schedule);
  EXPECT_EQ(slow.stats.sensors_sent, 14u);
  EXPECT_EQ(slow.stats.errors, 0u);
  EXPECT_LE(slow.stats.wall_ms, 9000.0);
  auto dump = [](const std::vector<SessionEvent>& ev) {
    std::string out;
    for (const auto& e : ev) out += to_jsonl(e) + "\n";
    return out;
  };
  EXPECT_EQ(dump(slow.events), dump(fast.events));
  ASSERT_EQ(slow.sensor_ts.size(), 14u);
  for (std::size_t i = 1; i < slow.sensor_ts.size(); ++i) {
    EXPECT_NEAR(static_cast<double>(slow.sensor_ts[i] - slow.sensor_ts[i - 1]), 62'000.0, 2'000.0);
  }
}

TEST(Robot, ScheduleParsing) {
  std::istringstream ok("# demo\n{\"at_ms\":0,\"type\":\"touch\",\"region\":\"head\"}\n\n{\"at_ms\":5,\"type\":\"face_lost\"}\n");
  EXPECT_EQ(parse_robot_schedule(ok).size(), 2u);
  std::istringstream bad("{\"at_ms\":10,\"type\":\"face_lost\"}\n{\"at_ms\":5,\"type\":\"face_lost\"}\n");
  try {
    parse_robot_schedule(bad);
    FAIL();
  } catch (const ScheduleError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
