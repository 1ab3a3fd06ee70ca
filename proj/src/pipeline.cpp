#include "coreg/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <optional>
#include <thread>

namespace coreg::pipeline {

CancelToken::CancelToken() : state_(std::make_shared<State>()) {}

void CancelToken::cancel() const {
  {
    std::lock_guard lock(state_->mu);
    state_->flag = true;
  }
  state_->cv.notify_all();
}

bool CancelToken::cancelled() const noexcept { return state_->flag.load(); }

bool CancelToken::wait_for(std::chrono::milliseconds d) const {
  std::unique_lock lock(state_->mu);
  return state_->cv.wait_for(lock, d, [&] { return state_->flag.load(); });
}

std::string_view to_string(HistoryRole role) noexcept {
  switch (role) {
    case HistoryRole::Robot: return "robot";
    case HistoryRole::Parent: return "parent";
    case HistoryRole::Child: return "child";
    case HistoryRole::UnknownHuman: return "unknown-human";
  }
  return "?";
}

HistoryRole history_role_for(Speaker speaker) noexcept {
  switch (speaker) {
    case Speaker::Parent: return HistoryRole::Parent;
    case Speaker::Child: return HistoryRole::Child;
    case Speaker::Robot: return HistoryRole::Robot;
    case Speaker::Unknown: return HistoryRole::UnknownHuman;
  }
  return HistoryRole::UnknownHuman;
}

void ConversationHistory::append_human(Speaker speaker, std::string text) {
  entries_.push_back({history_role_for(speaker), std::move(text)});
}

void ConversationHistory::append_robot(std::string text) {
  entries_.push_back({HistoryRole::Robot, std::move(text)});
}

void ConversationHistory::reset(std::uint64_t episode_id) {
  episode_id_ = episode_id;
  entries_.clear();
}

GateDecision gate_input(bool speaking, bool barge_in_enabled) noexcept {
  if (!speaking) return GateDecision::Accept;
  return barge_in_enabled ? GateDecision::AcceptWithBargeIn : GateDecision::Suppress;
}

Speaker ChannelAttributor::attribute(const vad::SpeechSegment& segment) const {
  auto it = channels_.find(segment.channel);
  return it == channels_.end() ? Speaker::Unknown : it->second;
}

namespace {

using Clock = std::chrono::steady_clock;

double now_ms() {
  return std::chrono::duration<double, std::milli>(Clock::now().time_since_epoch()).count();
}

/// Cancels the turn's token when the armed deadline passes.
class Watchdog {
 public:
  explicit Watchdog(CancelToken token) : token_(std::move(token)), thread_([this] { run(); }) {}

  ~Watchdog() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  void arm(std::string stage, std::chrono::milliseconds timeout) {
    {
      std::lock_guard lock(mu_);
      stage_ = std::move(stage);
      deadline_ = Clock::now() + timeout;
    }
    cv_.notify_all();
  }

  std::optional<std::string> fired() const {
    std::lock_guard lock(mu_);
    return fired_;
  }

 private:
  void run() {
    std::unique_lock lock(mu_);
    while (!stop_) {
      if (!deadline_) {
        cv_.wait(lock);
        continue;
      }
      const auto deadline = *deadline_;
      if (cv_.wait_until(lock, deadline, [&] { return stop_ || deadline_ != deadline; })) continue;
      fired_ = stage_;
      deadline_.reset();
      token_.cancel();
    }
  }

  CancelToken token_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::optional<Clock::time_point> deadline_;
  std::string stage_;
  std::optional<std::string> fired_;
  bool stop_ = false;
  std::thread thread_;
};

/// Ordered handoff from the LLM producer to the TTS consumer.
class TextQueue {
 public:
  void push(std::string_view piece) {
    {
      std::lock_guard lock(mu_);
      items_.emplace_back(piece);
    }
    cv_.notify_one();
  }

  void finish(std::optional<std::string> error = std::nullopt) {
    {
      std::lock_guard lock(mu_);
      done_ = true;
      error_ = std::move(error);
    }
    cv_.notify_one();
  }

  /// Next piece; nullopt once the producer finished or the turn is cancelled.
  std::optional<std::string> pop(const CancelToken& cancel) {
    std::unique_lock lock(mu_);
    while (true) {
      if (!items_.empty()) {
        auto s = std::move(items_.front());
        items_.pop_front();
        return s;
      }
      if (done_ || cancel.cancelled()) return std::nullopt;
      cv_.wait_for(lock, std::chrono::milliseconds(2));
    }
  }

  std::optional<std::string> error() const {
    std::lock_guard lock(mu_);
    return error_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> items_;
  bool done_ = false;
  std::optional<std::string> error_;
};

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool should_flush(std::string_view buffer, std::size_t max_chars) {
  if (buffer.size() >= max_chars) return true;
  auto end = buffer.find_last_not_of(" \t\n");
  if (end == std::string_view::npos) return false;
  const char c = buffer[end];
  return c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == ',';
}

}  // namespace

Pipeline::Pipeline(std::shared_ptr<AsrBackend> asr, std::shared_ptr<LlmBackend> llm,
                   std::shared_ptr<TtsBackend> tts, PipelineConfig cfg)
    : asr_(std::move(asr)), llm_(std::move(llm)), tts_(std::move(tts)), cfg_(cfg) {}

void Pipeline::cancel_current() {
  std::lock_guard lock(mu_);
  if (current_) current_->cancel();
}

AsrResult Pipeline::transcribe(const vad::SpeechSegment& segment) {
  CancelToken token;
  Watchdog watchdog(token);
  watchdog.arm("asr", cfg_.stage_timeout);
  try {
    auto result = asr_->transcribe(segment, token);
    if (token.cancelled()) return {};
    return result;
  } catch (const std::exception&) {
    return {};
  }
}

TurnResult Pipeline::run_turn(const vad::SpeechSegment& segment, const TurnContext& ctx,
                              ConversationHistory& history, const AudioSink& on_audio) {
  if (ctx.system_prompt.empty()) throw std::logic_error("run_turn requires an active episode prompt");

  CancelToken token;
  {
    std::lock_guard lock(mu_);
    current_ = std::make_unique<CancelToken>(token);
  }
  struct Release {
    Pipeline* self;
    ~Release() {
      std::lock_guard lock(self->mu_);
      self->current_.reset();
    }
  } release{this};

  TurnResult result;
  result.latency.t_speech_end = now_ms();
  Watchdog watchdog(token);

  auto abort = [&](std::string reason) {
    token.cancel();
    result.status = TurnStatus::Aborted;
    if (auto stage = watchdog.fired()) reason = *stage + " timeout";
    result.error = std::move(reason);
    return result;
  };

  watchdog.arm("asr", cfg_.stage_timeout);
  AsrResult asr;
  try {
    asr = asr_->transcribe(segment, token);
  } catch (const std::exception& e) {
    return abort(std::string("asr: ") + e.what());
  }
  if (token.cancelled()) return abort("cancelled");
  result.latency.t_asr_done = now_ms();
  if (blank(asr.text)) {
    result.status = TurnStatus::Skipped;
    return result;
  }
  result.human_text = asr.text;
  result.asr_confidence = asr.confidence;

  const ConversationHistory before = history;
  history.append_human(ctx.speaker, asr.text);

  LlmRequest request{ctx.system_prompt, history.entries(), ctx.addressee};
  TextQueue queue;
  std::atomic<double> first_token{0.0};
  watchdog.arm("llm", cfg_.stage_timeout);
  std::thread producer([&] {
    try {
      llm_->generate(
          request,
          [&](std::string_view piece) {
            if (piece.empty()) return;
            double expected = 0.0;
            first_token.compare_exchange_strong(expected, now_ms());
            queue.push(piece);
          },
          token);
      queue.finish();
    } catch (const std::exception& e) {
      queue.finish(std::string("llm: ") + e.what());
    }
  });

  std::string buffer;
  std::uint64_t idx = 0;
  auto speak = [&](const std::string& text) {
    tts_->synthesize(
        text,
        [&](std::vector<std::int16_t> pcm) {
          if (token.cancelled() || pcm.empty()) return;
          if (idx == 0) result.latency.t_tts_first_audio = now_ms();
          AudioChunk chunk{idx++, std::move(pcm)};
          result.audio_ms += chunk.duration_ms();
          if (on_audio) on_audio(chunk);
        },
        token);
  };

  std::optional<std::string> tts_error;
  try {
    while (auto piece = queue.pop(token)) {
      buffer += *piece;
      result.robot_text += *piece;
      if (should_flush(buffer, cfg_.tts_flush_chars)) {
        speak(buffer);
        buffer.clear();
      }
    }
    if (!token.cancelled() && !blank(buffer)) speak(buffer);
  } catch (const std::exception& e) {
    tts_error = std::string("tts: ") + e.what();
    token.cancel();
  }
  producer.join();

  auto fail = [&](std::string reason) {
    history = before;
    return abort(std::move(reason));
  };
  if (auto err = queue.error()) return fail(*err);
  if (tts_error) return fail(*tts_error);
  if (token.cancelled()) return fail("cancelled");
  if (blank(result.robot_text)) return fail("empty reply");

  result.chunks = idx;
  result.latency.t_llm_first_token = first_token.load();
  // A reply that produced no audio leaves t_tts_first_audio unset.
  auto& l = result.latency;
  l.t_asr_done = std::max(l.t_asr_done, l.t_speech_end);
  l.t_llm_first_token = std::max(l.t_llm_first_token, l.t_asr_done);
  l.t_tts_first_audio = std::max(l.t_tts_first_audio, l.t_llm_first_token);

  history.append_robot(result.robot_text);
  result.status = TurnStatus::Completed;
  return result;
}

}  // namespace coreg::pipeline
