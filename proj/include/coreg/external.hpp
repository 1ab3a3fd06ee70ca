#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "coreg/pipeline.hpp"

namespace coreg::pipeline {

/// Endpoint of a remote model server: "http://host:port/path".
struct HttpEndpoint {
  std::string url;
  std::chrono::milliseconds timeout{10000};
};

/// POST {"pcm_b64", "sample_rate"} -> {"text", "confidence"?}
class HttpAsr final : public AsrBackend {
 public:
  explicit HttpAsr(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  AsrResult transcribe(const vad::SpeechSegment& segment, const CancelToken& cancel) override;

 private:
  HttpEndpoint endpoint_;
};

/// POST {"system", "history": [{"role","text"}], "addressee", "text"} -> {"text"}
class HttpLlm final : public LlmBackend {
 public:
  explicit HttpLlm(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  void generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) override;

 private:
  HttpEndpoint endpoint_;
};

/// POST {"text"} -> {"chunks": [pcm_b64, ...]}
class HttpTts final : public TtsBackend {
 public:
  explicit HttpTts(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  void synthesize(std::string_view text, const PcmSink& on_pcm, const CancelToken& cancel) override;

 private:
  HttpEndpoint endpoint_;
};

/// Sends one JSON request and parses the JSON reply. Throws BackendError.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

struct Backends {
  std::shared_ptr<AsrBackend> asr;
  std::shared_ptr<LlmBackend> llm;
  std::shared_ptr<TtsBackend> tts;
};

/// Builds backends from config:
///   {"asr": {"kind": "mock", "fallback_text": "...", "delay_ms": 0},
///    "llm": {"kind": "mock", "mode": "template"|"echo"},
///    "tts": {"kind": "mock"}}
/// or {"kind": "external", "url": ..., "timeout_ms": ...} for any stage.
/// Throws std::invalid_argument on unknown kinds.
Backends make_backends(const nlohmann::json& config);

}  // namespace coreg::pipeline
