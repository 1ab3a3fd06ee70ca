#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "coreg/codec.hpp"
#include "coreg/core.hpp"
#include "coreg/events.hpp"
#include "coreg/wav.hpp"
#include "oracles.hpp"

using namespace coreg;

TEST(Mapping, MatchesTriggerTableFixture) {
  const auto rows = oracle::trigger_table_fixture().at("rows");
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& row : rows) {
    const auto code = parse_behavior_code(row.at("code").get<std::string>());
    const auto strategy = parse_strategy(row.at("strategy").get<std::string>());
    ASSERT_TRUE(code && strategy) << row.dump();
    EXPECT_EQ(map_behavior_to_strategy(*code), *strategy);
    EXPECT_EQ(trigger_code_for(*strategy), *code);
  }
}

TEST(Mapping, NamedRows) {
  EXPECT_EQ(map_behavior_to_strategy(BehaviorCode::NegativeStressfulInteraction), StrategyKind::BreathingExercise);
  EXPECT_EQ(map_behavior_to_strategy(BehaviorCode::ChildCannotFocus), StrategyKind::Refocus);
  EXPECT_EQ(map_behavior_to_strategy(BehaviorCode::NoStress), StrategyKind::Standby);
}

TEST(Mapping, SurjectiveOntoStrategies) {
  std::set<StrategyKind> seen;
  for (auto c : kAllBehaviorCodes) seen.insert(map_behavior_to_strategy(c));
  EXPECT_EQ(seen.size(), kAllStrategies.size());
}

TEST(Names, RoundTrip) {
  for (auto c : kAllBehaviorCodes) EXPECT_EQ(parse_behavior_code(to_string(c)), c);
  for (auto s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
  for (auto r : {ParticipantRole::Parent, ParticipantRole::Child, ParticipantRole::Robot, ParticipantRole::Operator}) {
    EXPECT_EQ(parse_participant_role(to_string(r)), r);
  }
  for (auto s : {Speaker::Parent, Speaker::Child, Speaker::Robot, Speaker::Unknown}) {
    EXPECT_EQ(parse_speaker(to_string(s)), s);
  }
  EXPECT_FALSE(parse_strategy("Nap"));
}

TEST(Names, TriggerCommandAcceptsBothForms) {
  auto a = parse_trigger_command("Refocus");
  auto b = parse_trigger_command("ChildCannotFocus");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(resolve(*a), StrategyKind::Refocus);
  EXPECT_EQ(resolve(*b), StrategyKind::Refocus);
  EXPECT_FALSE(parse_trigger_command("Dance"));
}

TEST(Codec, Base64KnownVectors) {
  auto enc = [](std::string s) {
    return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  EXPECT_FALSE(base64_decode("Zm9v!mFy"));
  auto dec = base64_decode("Zm9vYg==");
  ASSERT_TRUE(dec);
  EXPECT_EQ(std::string(dec->begin(), dec->end()), "foob");
}

TEST(Codec, PcmIsLittleEndian) {
  std::vector<std::int16_t> pcm{1, -2, 32767, -32768};
  const auto b64 = pcm_to_base64(pcm);
  auto bytes = base64_decode(b64);
  ASSERT_TRUE(bytes);
  ASSERT_EQ(bytes->size(), 8u);
  EXPECT_EQ((*bytes)[0], 1);
  EXPECT_EQ((*bytes)[1], 0);
  EXPECT_EQ((*bytes)[2], 0xFE);
  EXPECT_EQ((*bytes)[3], 0xFF);
  EXPECT_EQ(pcm_from_base64(b64), pcm);
  EXPECT_FALSE(pcm_from_base64("AA=="));
}

TEST(Codec, Sha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Wav, RoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "coreg_wav_roundtrip.wav").string();
  std::vector<std::int16_t> pcm(1234);
  for (std::size_t i = 0; i < pcm.size(); ++i) pcm[i] = static_cast<std::int16_t>(i * 37);
  write_wav_pcm16(path, pcm);
  EXPECT_EQ(read_wav_pcm16(path), pcm);
  write_wav_pcm16(path, pcm, 8000);
  EXPECT_THROW(read_wav_pcm16(path), WavFormatError);
  std::remove(path.c_str());
}

namespace {

SessionEvent ev(std::uint64_t seq, EventKind kind, SessionMs ts = 0) {
  SessionEvent e;
  e.seq = seq;
  e.ts = ts;
  e.kind = kind;
  return e;
}

}  // namespace

TEST(EventLog, JsonlRoundTrip) {
  auto e = ev(3, EventKind::TranscriptAdded, 1500);
  TranscriptEntry t{7, Speaker::Child, "hi", 1000, 1500, TranscriptSource::Asr};
  e.payload["entry"] = t;
  std::istringstream in(to_jsonl(e) + "\n\n" + to_jsonl(ev(4, EventKind::OperatorNote)) + "\n");
  auto back = read_event_log(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], e);
  EXPECT_EQ(back[0].payload.at("entry").get<TranscriptEntry>(), t);
}

TEST(EventLog, CorruptLineReportsLineNumber) {
  std::istringstream in(to_jsonl(ev(1, EventKind::OperatorNote)) + "\n{\"kind\":\n");
  try {
    read_event_log(in);
    FAIL() << "expected LogParseError";
  } catch (const LogParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EventLog, ValidatorAcceptsWellFormed) {
  std::vector<SessionEvent> log{ev(1, EventKind::InterventionTriggered), ev(2, EventKind::TimerPaused),
                                ev(3, EventKind::InterventionPreempted), ev(4, EventKind::InterventionTriggered),
                                ev(5, EventKind::InterventionCompleted), ev(6, EventKind::TimerResumed)};
  EXPECT_FALSE(validate_event_log(log));
  EXPECT_FALSE(validate_event_log({}));
}

TEST(EventLog, ValidatorRejections) {
  std::vector<SessionEvent> dup{ev(1, EventKind::OperatorNote), ev(1, EventKind::OperatorNote)};
  EXPECT_EQ(validate_event_log(dup)->index, 1u);
  std::vector<SessionEvent> resume{ev(1, EventKind::TimerResumed)};
  EXPECT_EQ(validate_event_log(resume)->index, 0u);
  std::vector<SessionEvent> double_pause{ev(1, EventKind::TimerPaused), ev(2, EventKind::TimerPaused)};
  EXPECT_EQ(validate_event_log(double_pause)->index, 1u);
  std::vector<SessionEvent> open{ev(1, EventKind::InterventionTriggered)};
  EXPECT_EQ(validate_event_log(open)->index, 1u);
  std::vector<SessionEvent> orphan{ev(1, EventKind::InterventionCompleted)};
  EXPECT_EQ(validate_event_log(orphan)->index, 0u);
}

TEST(EventLog, MaskTimestampsIgnoresTimeOnly) {
  std::vector<SessionEvent> a{ev(1, EventKind::OperatorNote, 10)};
  std::vector<SessionEvent> b{ev(1, EventKind::OperatorNote, 99)};
  EXPECT_EQ(mask_timestamps(a), mask_timestamps(b));
  b[0].payload["note"] = "x";
  EXPECT_NE(mask_timestamps(a), mask_timestamps(b));
}
