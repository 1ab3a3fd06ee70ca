#include "coreg/external.hpp"

#include <httplib.h>

#include <regex>

#include "coreg/codec.hpp"
#include "coreg/mocks.hpp"

namespace coreg::pipeline {
namespace {

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw BackendError("bad backend url: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

HttpEndpoint endpoint_from(const nlohmann::json& j) {
  HttpEndpoint e;
  e.url = j.at("url").get<std::string>();
  e.timeout = std::chrono::milliseconds(j.value("timeout_ms", 10000));
  return e;
}

}  // namespace

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body) {
  const auto url = split_url(endpoint.url);
  httplib::Client client(url.origin);
  const auto secs = endpoint.timeout.count() / 1000;
  const auto usecs = (endpoint.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  auto res = client.Post(url.path, body.dump(), "application/json");
  if (!res) throw BackendError("request to " + endpoint.url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BackendError("request to " + endpoint.url + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError("malformed reply from " + endpoint.url + ": " + e.what());
  }
}

AsrResult HttpAsr::transcribe(const vad::SpeechSegment& segment, const CancelToken& cancel) {
  auto reply = post_json(endpoint_, {{"pcm_b64", pcm_to_base64(segment.samples)},
                                     {"sample_rate", vad::kSampleRate},
                                     {"channel", segment.channel}});
  if (cancel.cancelled()) return {};
  return {reply.at("text").get<std::string>(), reply.value("confidence", 1.0)};
}

void HttpLlm::generate(const LlmRequest& request, const TokenSink& on_token, const CancelToken& cancel) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : request.history) history.push_back({{"role", to_string(e.role)}, {"text", e.text}});
  auto reply = post_json(endpoint_, {{"system", request.system_prompt},
                                     {"history", history},
                                     {"addressee", request.addressee},
                                     {"text", request.history.empty() ? "" : request.history.back().text}});
  if (cancel.cancelled()) return;
  on_token(reply.at("text").get<std::string>());
}

void HttpTts::synthesize(std::string_view text, const PcmSink& on_pcm, const CancelToken& cancel) {
  auto reply = post_json(endpoint_, {{"text", text}});
  for (const auto& chunk : reply.at("chunks")) {
    if (cancel.cancelled()) return;
    auto pcm = pcm_from_base64(chunk.get<std::string>());
    if (!pcm) throw BackendError("tts returned malformed base64 audio");
    on_pcm(std::move(*pcm));
  }
}

Backends make_backends(const nlohmann::json& config) {
  Backends b;
  const auto asr = config.value("asr", nlohmann::json{{"kind", "mock"}});
  const auto llm = config.value("llm", nlohmann::json{{"kind", "mock"}});
  const auto tts = config.value("tts", nlohmann::json{{"kind", "mock"}});

  const auto asr_kind = asr.value("kind", std::string("mock"));
  if (asr_kind == "mock") {
    b.asr = std::make_shared<ScriptedAsr>(asr.value("fallback_text", std::string()));
  } else if (asr_kind == "external") {
    b.asr = std::make_shared<HttpAsr>(endpoint_from(asr));
  } else {
    throw std::invalid_argument("unknown asr backend kind: " + asr_kind);
  }
  if (const int delay = asr.value("delay_ms", 0); delay > 0) {
    b.asr = std::make_shared<DelayedAsr>(b.asr, std::chrono::milliseconds(delay));
  }

  const auto llm_kind = llm.value("kind", std::string("mock"));
  if (llm_kind == "mock") {
    const auto mode = llm.value("mode", std::string("template"));
    if (mode == "echo") {
      b.llm = std::make_shared<EchoLlm>();
    } else if (mode == "template") {
      b.llm = std::make_shared<TemplateLlm>();
    } else {
      throw std::invalid_argument("unknown mock llm mode: " + mode);
    }
  } else if (llm_kind == "external") {
    b.llm = std::make_shared<HttpLlm>(endpoint_from(llm));
  } else {
    throw std::invalid_argument("unknown llm backend kind: " + llm_kind);
  }

  const auto tts_kind = tts.value("kind", std::string("mock"));
  if (tts_kind == "mock") {
    b.tts = std::make_shared<SyntheticTts>();
  } else if (tts_kind == "external") {
    b.tts = std::make_shared<HttpTts>(endpoint_from(tts));
  } else {
    throw std::invalid_argument("unknown tts backend kind: " + tts_kind);
  }
  return b;
}

}  // namespace coreg::pipeline
