#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "coreg/core.hpp"
#include "coreg/vad.hpp"

namespace coreg::pipeline {

/// Shared cancellation flag. Backends poll it or sleep on it.
class CancelToken {
 public:
  CancelToken();

  void cancel() const;
  bool cancelled() const noexcept;
  /// Sleeps up to `d`; returns true early if cancelled.
  bool wait_for(std::chrono::milliseconds d) const;

 private:
  struct State {
    std::atomic<bool> flag{false};
    std::mutex mu;
    std::condition_variable cv;
  };
  std::shared_ptr<State> state_;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AsrResult {
  std::string text;
  double confidence = 0.0;
};

class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  virtual AsrResult transcribe(const vad::SpeechSegment& segment, const CancelToken& cancel) = 0;
};

enum class HistoryRole { Robot, Parent, Child, UnknownHuman };

std::string_view to_string(HistoryRole role) noexcept;
HistoryRole history_role_for(Speaker speaker) noexcept;

struct HistoryEntry {
  HistoryRole role = HistoryRole::UnknownHuman;
  std::string text;

  bool operator==(const HistoryEntry&) const = default;
};

/// Dialogue context of one intervention episode.
class ConversationHistory {
 public:
  std::uint64_t episode_id() const noexcept { return episode_id_; }
  const std::vector<HistoryEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  void append_human(Speaker speaker, std::string text);
  void append_robot(std::string text);
  /// Empties the history and scopes it to a new episode.
  void reset(std::uint64_t episode_id);

  bool operator==(const ConversationHistory&) const = default;

 private:
  std::uint64_t episode_id_ = 0;
  std::vector<HistoryEntry> entries_;
};

struct LlmRequest {
  std::string system_prompt;
  std::vector<HistoryEntry> history;
  /// Addressee of the current phase, e.g. "Parent" or "Parent+Child".
  std::string addressee;
};

using TokenSink = std::function<void(std::string_view)>;

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  /// Streams the reply through `on_token`; returns when the stream ends.
  virtual void generate(const LlmRequest& request, const TokenSink& on_token,
                        const CancelToken& cancel) = 0;
};

using PcmSink = std::function<void(std::vector<std::int16_t>)>;

class TtsBackend {
 public:
  virtual ~TtsBackend() = default;
  /// Emits 16 kHz mono PCM in playback order.
  virtual void synthesize(std::string_view text, const PcmSink& on_pcm, const CancelToken& cancel) = 0;
};

struct AudioChunk {
  std::uint64_t idx = 0;
  std::vector<std::int16_t> pcm;

  SessionMs duration_ms() const noexcept {
    return static_cast<SessionMs>(pcm.size()) * 1000 / vad::kSampleRate;
  }
};

using AudioSink = std::function<void(const AudioChunk&)>;

/// Stage timestamps in milliseconds on the pipeline's monotonic clock.
struct TurnLatencyReport {
  double t_speech_end = 0.0;
  double t_asr_done = 0.0;
  double t_llm_first_token = 0.0;
  double t_tts_first_audio = 0.0;

  double response_gap() const noexcept { return t_tts_first_audio - t_speech_end; }
};

enum class GateDecision { Accept, Suppress, AcceptWithBargeIn };

/// Half-duplex gate: suppress iff the robot is speaking and barge-in is off.
GateDecision gate_input(bool speaking, bool barge_in_enabled) noexcept;

/// Speaker attribution hook; the speech front end has no diarization.
class SpeakerAttributor {
 public:
  virtual ~SpeakerAttributor() = default;
  virtual Speaker attribute(const vad::SpeechSegment& segment) const = 0;
};

class UnknownAttributor final : public SpeakerAttributor {
 public:
  Speaker attribute(const vad::SpeechSegment&) const override { return Speaker::Unknown; }
};

/// One microphone channel per participant.
class ChannelAttributor final : public SpeakerAttributor {
 public:
  explicit ChannelAttributor(std::map<int, Speaker> channels) : channels_(std::move(channels)) {}
  Speaker attribute(const vad::SpeechSegment& segment) const override;

 private:
  std::map<int, Speaker> channels_;
};

struct PipelineConfig {
  std::chrono::milliseconds stage_timeout{10000};
  /// LLM text is handed to TTS at sentence punctuation or after this many chars.
  std::size_t tts_flush_chars = 48;
};

struct TurnContext {
  std::string system_prompt;
  std::string addressee;
  Speaker speaker = Speaker::Unknown;
};

enum class TurnStatus { Completed, Skipped, Aborted };

struct TurnResult {
  TurnStatus status = TurnStatus::Skipped;
  std::string human_text;
  double asr_confidence = 0.0;
  std::string robot_text;
  std::uint64_t chunks = 0;
  SessionMs audio_ms = 0;
  TurnLatencyReport latency;
  std::string error;
};

/// The speech cascade: ASR -> LLM (streaming) -> TTS (streaming).
class Pipeline {
 public:
  Pipeline(std::shared_ptr<AsrBackend> asr, std::shared_ptr<LlmBackend> llm,
           std::shared_ptr<TtsBackend> tts, PipelineConfig cfg = {});

  /// Runs one human->robot exchange. On Completed the history gains the
  /// human entry then the robot entry; on Skipped or Aborted it is left
  /// exactly as it was. Throws std::logic_error if no system prompt is set.
  TurnResult run_turn(const vad::SpeechSegment& segment, const TurnContext& ctx,
                      ConversationHistory& history, const AudioSink& on_audio);

  /// ASR only, under the stage timeout; used while no episode is active.
  /// Returns empty text on timeout or backend failure.
  AsrResult transcribe(const vad::SpeechSegment& segment);

  /// Aborts the in-flight turn, if any. Safe from any thread.
  void cancel_current();

  const PipelineConfig& config() const noexcept { return cfg_; }

 private:
  std::shared_ptr<AsrBackend> asr_;
  std::shared_ptr<LlmBackend> llm_;
  std::shared_ptr<TtsBackend> tts_;
  PipelineConfig cfg_;
  std::mutex mu_;
  std::unique_ptr<CancelToken> current_;
};

}  // namespace coreg::pipeline
