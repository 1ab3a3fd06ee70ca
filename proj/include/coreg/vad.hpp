#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "coreg/core.hpp"

namespace coreg::vad {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameMs = 20;
inline constexpr std::size_t kFrameSamples = 320;

class FrameFormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 20 ms of 16 kHz mono PCM-16.
class AudioFrame {
 public:
  /// Throws FrameFormatError unless samples.size() == 320.
  AudioFrame(std::uint64_t index, std::span<const std::int16_t> samples);

  std::uint64_t index() const noexcept { return index_; }
  std::span<const std::int16_t> samples() const noexcept { return samples_; }
  SessionMs start_ms() const noexcept { return static_cast<SessionMs>(index_) * kFrameMs; }

 private:
  std::uint64_t index_;
  std::array<std::int16_t, kFrameSamples> samples_{};
};

struct VadConfig {
  double energy_threshold_db = 12.0;
  double noise_floor_adaptation = 0.05;
  int hangover_ms = 300;
  int min_speech_ms = 200;
  /// Noise floor of a fresh state, dBFS.
  double initial_floor_db = -60.0;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

struct VadState {
  double noise_floor_db = -60.0;
  int hangover_left_ms = 0;

  static VadState fresh(const VadConfig& cfg) noexcept { return {cfg.initial_floor_db, 0}; }
};

struct FrameDecision {
  VadState state;
  bool active = false;
};

/// Lowest level the noise floor can adapt down to.
inline constexpr double kFloorMinDb = -100.0;

/// RMS level relative to full scale; -infinity for digital silence.
double frame_energy_dbfs(std::span<const std::int16_t> samples) noexcept;

FrameDecision classify_frame(const AudioFrame& frame, const VadState& state, const VadConfig& cfg);

/// Variant over raw samples; throws FrameFormatError on a malformed length.
FrameDecision classify_frame(std::span<const std::int16_t> samples, const VadState& state,
                             const VadConfig& cfg);

struct SpeechSegment {
  SessionMs start_ms = 0;
  SessionMs end_ms = 0;
  /// Frame range [first_frame, end_frame).
  std::uint64_t first_frame = 0;
  std::uint64_t end_frame = 0;
  std::vector<std::int16_t> samples;
  /// Input channel; used by per-channel speaker attribution.
  int channel = 0;

  SessionMs duration_ms() const noexcept { return end_ms - start_ms; }
  bool operator==(const SpeechSegment&) const = default;
};

/// Incremental segmenter. Feed frames in index order; a segment is returned
/// once the active run (hangover included) closes and meets min_speech_ms.
class Segmenter {
 public:
  explicit Segmenter(VadConfig cfg, int channel = 0);

  std::optional<SpeechSegment> push(const AudioFrame& frame);
  /// Closes a run still open at end of stream.
  std::optional<SpeechSegment> flush();

  const VadState& state() const noexcept { return state_; }
  bool in_speech() const noexcept { return open_.has_value(); }

 private:
  std::optional<SpeechSegment> close_run();

  VadConfig cfg_;
  int channel_;
  VadState state_;
  std::optional<SpeechSegment> open_;
  std::optional<std::uint64_t> expected_index_;
};

/// Splits a contiguous frame sequence into speech segments. Throws
/// std::invalid_argument if frame indices are not contiguous.
std::vector<SpeechSegment> segment_stream(std::span<const AudioFrame> frames, const VadConfig& cfg);

/// Chops PCM into frames, zero-padding the last partial frame.
std::vector<AudioFrame> frames_from_pcm(std::span<const std::int16_t> pcm,
                                        std::uint64_t first_index = 0);

}  // namespace coreg::vad
