#include "coreg/vad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace coreg::vad {

AudioFrame::AudioFrame(std::uint64_t index, std::span<const std::int16_t> samples) : index_(index) {
  if (samples.size() != kFrameSamples) {
    throw FrameFormatError("audio frame must hold 320 samples, got " +
                           std::to_string(samples.size()));
  }
  std::copy(samples.begin(), samples.end(), samples_.begin());
}

void VadConfig::validate() const {
  if (!(noise_floor_adaptation > 0.0 && noise_floor_adaptation < 1.0)) {
    throw std::invalid_argument("noise_floor_adaptation must lie in (0,1)");
  }
  if (hangover_ms < 0 || hangover_ms % kFrameMs != 0) {
    throw std::invalid_argument("hangover_ms must be a non-negative multiple of 20");
  }
  if (min_speech_ms < 0 || min_speech_ms % kFrameMs != 0) {
    throw std::invalid_argument("min_speech_ms must be a non-negative multiple of 20");
  }
  if (!std::isfinite(energy_threshold_db) || !std::isfinite(initial_floor_db)) {
    throw std::invalid_argument("VAD levels must be finite");
  }
}

double frame_energy_dbfs(std::span<const std::int16_t> samples) noexcept {
  if (samples.empty()) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (auto s : samples) sum += static_cast<double>(s) * static_cast<double>(s);
  const double rms = std::sqrt(sum / static_cast<double>(samples.size()));
  if (rms == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(rms / 32768.0);
}

FrameDecision classify_frame(const AudioFrame& frame, const VadState& state, const VadConfig& cfg) {
  const double level = frame_energy_dbfs(frame.samples());
  FrameDecision out{state, false};
  const bool loud = level > state.noise_floor_db + cfg.energy_threshold_db;
  if (loud) {
    out.state.hangover_left_ms = cfg.hangover_ms;
    out.active = true;
    return out;
  }
  // Quiet frames (hangover included) feed the noise floor estimate.
  const double clamped = std::max(level, kFloorMinDb);
  out.state.noise_floor_db = (1.0 - cfg.noise_floor_adaptation) * state.noise_floor_db +
                             cfg.noise_floor_adaptation * clamped;
  if (state.hangover_left_ms > 0) {
    out.state.hangover_left_ms = state.hangover_left_ms - kFrameMs;
    out.active = true;
  }
  return out;
}

FrameDecision classify_frame(std::span<const std::int16_t> samples, const VadState& state,
                             const VadConfig& cfg) {
  return classify_frame(AudioFrame(0, samples), state, cfg);
}

Segmenter::Segmenter(VadConfig cfg, int channel)
    : cfg_(cfg), channel_(channel), state_(VadState::fresh(cfg)) {
  cfg_.validate();
}

std::optional<SpeechSegment> Segmenter::push(const AudioFrame& frame) {
  if (expected_index_ && frame.index() != *expected_index_) {
    throw std::invalid_argument("frames are not contiguous at index " +
                                std::to_string(frame.index()));
  }
  expected_index_ = frame.index() + 1;

  auto decision = classify_frame(frame, state_, cfg_);
  state_ = decision.state;
  if (decision.active) {
    if (!open_) {
      open_.emplace();
      open_->first_frame = frame.index();
      open_->start_ms = frame.start_ms();
      open_->channel = channel_;
    }
    open_->end_frame = frame.index() + 1;
    open_->end_ms = frame.start_ms() + kFrameMs;
    auto s = frame.samples();
    open_->samples.insert(open_->samples.end(), s.begin(), s.end());
    return std::nullopt;
  }
  return close_run();
}

std::optional<SpeechSegment> Segmenter::flush() { return close_run(); }

std::optional<SpeechSegment> Segmenter::close_run() {
  if (!open_) return std::nullopt;
  auto seg = std::move(*open_);
  open_.reset();
  if (seg.duration_ms() < cfg_.min_speech_ms) return std::nullopt;
  return seg;
}

std::vector<SpeechSegment> segment_stream(std::span<const AudioFrame> frames, const VadConfig& cfg) {
  Segmenter segmenter(cfg);
  std::vector<SpeechSegment> out;
  for (const auto& frame : frames) {
    if (auto seg = segmenter.push(frame)) out.push_back(std::move(*seg));
  }
  if (auto seg = segmenter.flush()) out.push_back(std::move(*seg));
  return out;
}

std::vector<AudioFrame> frames_from_pcm(std::span<const std::int16_t> pcm,
                                        std::uint64_t first_index) {
  std::vector<AudioFrame> frames;
  frames.reserve((pcm.size() + kFrameSamples - 1) / kFrameSamples);
  std::array<std::int16_t, kFrameSamples> buf{};
  for (std::size_t off = 0; off < pcm.size(); off += kFrameSamples) {
    const std::size_t n = std::min(kFrameSamples, pcm.size() - off);
    buf.fill(0);
    std::copy_n(pcm.begin() + static_cast<std::ptrdiff_t>(off), n, buf.begin());
    frames.emplace_back(first_index + frames.size(), buf);
  }
  return frames;
}

}  // namespace coreg::vad
