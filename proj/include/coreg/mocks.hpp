#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "coreg/pipeline.hpp"

namespace coreg::pipeline {

/// FNV-1a over timing, channel and samples of a segment.
std::uint64_t segment_fingerprint(const vad::SpeechSegment& segment) noexcept;

/// Maps segment fingerprints to fixture text. Unknown segments yield the
/// fallback text (empty by default, which skips the turn).
class ScriptedAsr final : public AsrBackend {
 public:
  explicit ScriptedAsr(std::string fallback = {}) : fallback_(std::move(fallback)) {}

  void expect(const vad::SpeechSegment& segment, std::string text);
  void expect(std::uint64_t fingerprint, std::string text);
  AsrResult transcribe(const vad::SpeechSegment& segment, const CancelToken& cancel) override;

 private:
  std::mutex mu_;
  std::map<std::uint64_t, std::string> fixtures_;
  std::string fallback_;
};

/// Replies with the latest human entry verbatim.
class EchoLlm final : public LlmBackend {
 public:
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;
};

/// Deterministic strategy-flavoured replies keyed on the system prompt,
/// the addressee and the turn number.
class TemplateLlm final : public LlmBackend {
 public:
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;
  static std::string reply_for(const LlmRequest& request);
};

/// Plays back fixed replies in order, then falls back to TemplateLlm.
class ScriptedLlm final : public LlmBackend {
 public:
  explicit ScriptedLlm(std::deque<std::string> replies = {}) : replies_(std::move(replies)) {}
  void push(std::string reply);
  void clear();
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;

 private:
  std::mutex mu_;
  std::deque<std::string> replies_;
};

/// Silence lasting 60 ms per character, in 100 ms chunks.
class SyntheticTts final : public TtsBackend {
 public:
  static constexpr SessionMs kMsPerChar = 60;
  void synthesize(std::string_view text, const PcmSink& on_pcm, const CancelToken& cancel) override;
  static SessionMs duration_for(std::string_view text) noexcept;
};

/// Adds a cancellable delay before delegating.
class DelayedAsr final : public AsrBackend {
 public:
  DelayedAsr(std::shared_ptr<AsrBackend> inner, std::chrono::milliseconds delay)
      : inner_(std::move(inner)), delay_(delay) {}
  AsrResult transcribe(const vad::SpeechSegment& segment, const CancelToken& cancel) override;

 private:
  std::shared_ptr<AsrBackend> inner_;
  std::chrono::milliseconds delay_;
};

class DelayedLlm final : public LlmBackend {
 public:
  DelayedLlm(std::shared_ptr<LlmBackend> inner, std::chrono::milliseconds delay)
      : inner_(std::move(inner)), delay_(delay) {}
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;

 private:
  std::shared_ptr<LlmBackend> inner_;
  std::chrono::milliseconds delay_;
};

/// Re-emits the inner stream split into 1-4 character pieces with random
/// pauses between them.
class JitterLlm final : public LlmBackend {
 public:
  JitterLlm(std::shared_ptr<LlmBackend> inner, std::uint32_t seed, int max_pause_ms = 3)
      : inner_(std::move(inner)), seed_(seed), max_pause_ms_(max_pause_ms) {}
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;

 private:
  std::shared_ptr<LlmBackend> inner_;
  std::uint32_t seed_;
  int max_pause_ms_;
};

/// Counts generate calls, and separately the calls made while `probe`
/// reports Standby.
class CountingLlm final : public LlmBackend {
 public:
  CountingLlm(std::shared_ptr<LlmBackend> inner, std::function<bool()> standby_probe)
      : inner_(std::move(inner)), probe_(std::move(standby_probe)) {}
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;

  std::uint64_t calls() const noexcept { return calls_; }
  std::uint64_t calls_while_standby() const noexcept { return standby_calls_; }
  void set_probe(std::function<bool()> probe) { probe_ = std::move(probe); }

 private:
  std::shared_ptr<LlmBackend> inner_;
  std::function<bool()> probe_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> standby_calls_{0};
};

/// Throws BackendError from every stage call.
class FailingLlm final : public LlmBackend {
 public:
  void generate(const LlmRequest&, const TokenSink&, const CancelToken&) override {
    throw BackendError("backend unavailable");
  }
};

}  // namespace coreg::pipeline
