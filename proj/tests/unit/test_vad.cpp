#include <gtest/gtest.h>

#include <random>

#include "coreg/vad.hpp"
#include "oracles.hpp"

using namespace coreg;
using namespace coreg::vad;

namespace {

std::vector<std::int16_t> concat(std::initializer_list<std::vector<std::int16_t>> parts) {
  std::vector<std::int16_t> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<oracle::FrameRun> runs_of(const std::vector<SpeechSegment>& segs) {
  std::vector<oracle::FrameRun> out;
  for (const auto& s : segs) out.push_back({s.first_frame, s.end_frame});
  return out;
}

}  // namespace

TEST(Classify, SilenceIsInactive) {
  std::vector<std::int16_t> zero(kFrameSamples, 0);
  VadConfig cfg;
  EXPECT_FALSE(classify_frame(zero, VadState::fresh(cfg), cfg).active);
}

TEST(Classify, FullScaleIsActive) {
  auto sq = oracle::square_ms(20);
  VadConfig cfg;
  auto d = classify_frame(sq, VadState::fresh(cfg), cfg);
  EXPECT_TRUE(d.active);
  EXPECT_EQ(d.state.hangover_left_ms, cfg.hangover_ms);
}

TEST(Classify, HangoverKeepsSilenceActive) {
  VadConfig cfg;
  auto state = classify_frame(oracle::square_ms(20), VadState::fresh(cfg), cfg).state;
  std::vector<std::int16_t> zero(kFrameSamples, 0);
  for (int ms = 20; ms <= 300; ms += 20) {
    auto d = classify_frame(zero, state, cfg);
    EXPECT_TRUE(d.active) << ms;
    state = d.state;
  }
  EXPECT_FALSE(classify_frame(zero, state, cfg).active);
}

TEST(Classify, MalformedLengthThrows) {
  std::vector<std::int16_t> short_frame(100, 0);
  VadConfig cfg;
  EXPECT_THROW(classify_frame(short_frame, VadState::fresh(cfg), cfg), FrameFormatError);
}

TEST(Config, RejectsNonFrameMultiples) {
  VadConfig cfg;
  cfg.hangover_ms = 30;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.noise_floor_adaptation = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Segment, DigitalSilenceYieldsNothing) {
  auto frames = frames_from_pcm(oracle::silence_ms(2000));
  EXPECT_TRUE(segment_stream(frames, VadConfig{}).empty());
  EXPECT_TRUE(segment_stream({}, VadConfig{}).empty());
}

TEST(Segment, ToneFixture) {
  auto pcm = concat({oracle::silence_ms(500), oracle::square_ms(1000), oracle::silence_ms(1000)});
  auto frames = frames_from_pcm(pcm);
  VadConfig cfg;
  cfg.hangover_ms = 300;
  cfg.min_speech_ms = 200;
  auto segs = segment_stream(frames, cfg);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].start_ms, 500);
  EXPECT_EQ(segs[0].end_ms, 1800);
  EXPECT_EQ(segs[0].samples.size(), 1300u * 16);
  EXPECT_EQ(runs_of(segs), oracle::vad_oracle(oracle::split_frames(pcm), cfg));

  cfg.min_speech_ms = 1500;
  EXPECT_TRUE(segment_stream(frames, cfg).empty());
  EXPECT_TRUE(oracle::vad_oracle(oracle::split_frames(pcm), cfg).empty());
}

TEST(Segment, NonContiguousFramesThrow) {
  std::vector<std::int16_t> zero(kFrameSamples, 0);
  std::vector<AudioFrame> frames{AudioFrame(0, zero), AudioFrame(2, zero)};
  EXPECT_THROW(segment_stream(frames, VadConfig{}), std::invalid_argument);
}

TEST(Segment, MatchesOracleOnRandomStreams) {
  std::mt19937 rng(20240601);
  std::uniform_int_distribution<int> hang(0, 20), minsp(0, 20);
  std::uniform_real_distribution<double> thr(3.0, 30.0), adapt(0.01, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    VadConfig cfg;
    cfg.hangover_ms = hang(rng) * kFrameMs;
    cfg.min_speech_ms = minsp(rng) * kFrameMs;
    cfg.energy_threshold_db = thr(rng);
    cfg.noise_floor_adaptation = adapt(rng);
    auto raw = oracle::random_stream(rng, 400);
    auto segs = segment_stream(oracle::to_frames(raw), cfg);
    ASSERT_EQ(runs_of(segs), oracle::vad_oracle(raw, cfg)) << "trial " << trial;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      EXPECT_GE(segs[i].duration_ms(), cfg.min_speech_ms);
      EXPECT_EQ(segs[i].start_ms, static_cast<SessionMs>(segs[i].first_frame) * kFrameMs);
      if (i > 0) {
        EXPECT_GT(segs[i].first_frame, segs[i - 1].end_frame);
      }
    }
  }
}

TEST(Segment, LowerThresholdNeverShrinks) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto raw = oracle::random_stream(rng, 300);
    auto frames = oracle::to_frames(raw);
    VadConfig hi;
    hi.energy_threshold_db = 20;
    hi.noise_floor_adaptation = 0.05;
    VadConfig lo = hi;
    lo.energy_threshold_db = 10;
    hi.noise_floor_adaptation = lo.noise_floor_adaptation = 1e-9;
    auto a = segment_stream(frames, hi);
    auto b = segment_stream(frames, lo);
    for (const auto& s : a) {
      bool covered = false;
      for (const auto& t : b) covered = covered || (t.first_frame <= s.first_frame && t.end_frame >= s.end_frame);
      EXPECT_TRUE(covered) << "trial " << trial;
    }
  }
}

TEST(Segment, Deterministic) {
  std::mt19937 rng(99);
  auto frames = oracle::to_frames(oracle::random_stream(rng, 500));
  EXPECT_EQ(segment_stream(frames, VadConfig{}), segment_stream(frames, VadConfig{}));
}

TEST(Segmenter, StreamingMatchesBatch) {
  std::mt19937 rng(3);
  auto frames = oracle::to_frames(oracle::random_stream(rng, 500));
  Segmenter s(VadConfig{}, 1);
  std::vector<SpeechSegment> got;
  for (const auto& f : frames) {
    if (auto seg = s.push(f)) got.push_back(*seg);
  }
  if (auto seg = s.flush()) got.push_back(*seg);
  auto batch = segment_stream(frames, VadConfig{});
  ASSERT_EQ(got.size(), batch.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].channel, 1);
    got[i].channel = 0;
    EXPECT_EQ(got[i], batch[i]);
  }
}
