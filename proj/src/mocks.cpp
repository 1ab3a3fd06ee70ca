#include "coreg/mocks.hpp"

#include <random>
#include <thread>

#include "coreg/intervention.hpp"

namespace coreg::pipeline {
namespace {

/// Splits text into word pieces that concatenate back to the input.
template <typename F>
void for_each_word(std::string_view text, F&& f) {
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(' ', start + 1);
    if (end == std::string_view::npos) end = text.size();
    f(text.substr(start, end - start));
    start = end;
  }
}

std::optional<StrategyKind> strategy_for_prompt(std::string_view prompt) {
  for (auto kind : kActiveStrategies) {
    if (render_prompt(kind) == prompt) return kind;
  }
  return std::nullopt;
}

std::size_t robot_turns(const std::vector<HistoryEntry>& history) {
  std::size_t n = 0;
  for (const auto& e : history) n += e.role == HistoryRole::Robot;
  return n;
}

}  // namespace

std::uint64_t segment_fingerprint(const vad::SpeechSegment& segment) noexcept {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(segment.start_ms));
  mix(static_cast<std::uint64_t>(segment.end_ms));
  mix(static_cast<std::uint64_t>(segment.channel));
  for (auto s : segment.samples) {
    h ^= static_cast<std::uint16_t>(s) & 0xffu;
    h *= 1099511628211ull;
    h ^= static_cast<std::uint16_t>(s) >> 8;
    h *= 1099511628211ull;
  }
  return h;
}

void ScriptedAsr::expect(const vad::SpeechSegment& segment, std::string text) {
  expect(segment_fingerprint(segment), std::move(text));
}

void ScriptedAsr::expect(std::uint64_t fingerprint, std::string text) {
  std::lock_guard lock(mu_);
  fixtures_[fingerprint] = std::move(text);
}

AsrResult ScriptedAsr::transcribe(const vad::SpeechSegment& segment, const CancelToken&) {
  std::lock_guard lock(mu_);
  auto it = fixtures_.find(segment_fingerprint(segment));
  if (it == fixtures_.end()) return {fallback_, fallback_.empty() ? 0.0 : 0.5};
  return {it->second, 1.0};
}

void EchoLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  for (auto it = request.history.rbegin(); it != request.history.rend(); ++it) {
    if (it->role == HistoryRole::Robot) continue;
    for_each_word(it->text, [&](std::string_view w) {
      if (!cancel.cancelled()) on_token(w);
    });
    return;
  }
}

std::string TemplateLlm::reply_for(const LlmRequest& request) {
  const auto kind = strategy_for_prompt(request.system_prompt);
  const auto turn = robot_turns(request.history);
  const std::string who = request.addressee.empty() ? std::string("friends") : request.addressee;
  std::string body;
  switch (kind.value_or(StrategyKind::Standby)) {
    case StrategyKind::BreathingExercise:
      body = turn % 2 == 0 ? "Let's breathe in slowly together, one, two, three, four."
                           : "Now breathe out gently. Can you both try it once more?";
      break;
    case StrategyKind::PhysicalTouch:
      body = turn % 2 == 0 ? "A gentle hand on the shoulder can help a lot."
                           : "I feel a little sad. Would you pet my back to cheer me up?";
      break;
    case StrategyKind::PositiveReinforcement:
      body = "You are making real progress. Try saying: I love how carefully you placed that piece! "
             "What will you build next?";
      break;
    case StrategyKind::EmotionValidation:
      body = turn % 2 == 0 ? "This is a tricky puzzle and it is okay to feel frustrated."
                           : "What feeling do you notice right now?";
      break;
    case StrategyKind::Refocus:
      body = "Hey, the LEGO pieces are waiting for you! Which piece comes next?";
      break;
    case StrategyKind::Standby:
      body = "I am listening.";
      break;
  }
  return who + ", " + body;
}

void TemplateLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  for_each_word(reply_for(request), [&](std::string_view w) {
    if (!cancel.cancelled()) on_token(w);
  });
}

void ScriptedLlm::push(std::string reply) {
  std::lock_guard lock(mu_);
  replies_.push_back(std::move(reply));
}

void ScriptedLlm::clear() {
  std::lock_guard lock(mu_);
  replies_.clear();
}

void ScriptedLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  std::string reply;
  {
    std::lock_guard lock(mu_);
    if (!replies_.empty()) {
      reply = std::move(replies_.front());
      replies_.pop_front();
    }
  }
  if (reply.empty()) reply = TemplateLlm::reply_for(request);
  for_each_word(reply, [&](std::string_view w) {
    if (!cancel.cancelled()) on_token(w);
  });
}

SessionMs SyntheticTts::duration_for(std::string_view text) noexcept {
  return static_cast<SessionMs>(text.size()) * kMsPerChar;
}

void SyntheticTts::synthesize(std::string_view text, const PcmSink& on_pcm, const CancelToken& cancel) {
  constexpr std::size_t kChunk = vad::kSampleRate / 10;
  std::size_t remaining = static_cast<std::size_t>(duration_for(text)) * vad::kSampleRate / 1000;
  while (remaining > 0 && !cancel.cancelled()) {
    const std::size_t n = std::min(kChunk, remaining);
    on_pcm(std::vector<std::int16_t>(n, 0));
    remaining -= n;
  }
}

AsrResult DelayedAsr::transcribe(const vad::SpeechSegment& segment, const CancelToken& cancel) {
  if (cancel.wait_for(delay_)) return {};
  return inner_->transcribe(segment, cancel);
}

void DelayedLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  if (cancel.wait_for(delay_)) return;
  inner_->generate(request, on_token, cancel);
}

void JitterLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  std::string text;
  inner_->generate(request, [&](std::string_view piece) { text += piece; }, cancel);
  std::mt19937 rng(seed_);
  std::uniform_int_distribution<std::size_t> len(1, 4);
  std::uniform_int_distribution<int> pause(0, max_pause_ms_);
  std::size_t pos = 0;
  while (pos < text.size() && !cancel.cancelled()) {
    const std::size_t n = std::min(len(rng), text.size() - pos);
    on_token(std::string_view(text).substr(pos, n));
    pos += n;
    if (const int ms = pause(rng); ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
}

void CountingLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  ++calls_;
  if (probe_ && probe_()) ++standby_calls_;
  inner_->generate(request, on_token, cancel);
}

}  // namespace coreg::pipeline
