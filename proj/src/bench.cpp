#include "coreg/bench.hpp"

#include <algorithm>
#include <cmath>

#include "coreg/intervention.hpp"
#include "coreg/mocks.hpp"

namespace coreg::bench {

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto n = samples.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return samples[rank - 1];
}

LatencySummary summarize(const std::vector<double>& samples) {
  LatencySummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  s.p50 = percentile(samples, 50);
  s.p95 = percentile(samples, 95);
  s.max = *std::max_element(samples.begin(), samples.end());
  return s;
}

nlohmann::json to_json(const LatencySummary& s) {
  return {{"count", s.count}, {"p50", s.p50}, {"p95", s.p95}, {"max", s.max}};
}

BenchReport run_bench(const BenchOptions& options) {
  std::shared_ptr<pipeline::AsrBackend> asr = std::make_shared<pipeline::ScriptedAsr>("can you help us with this piece");
  if (options.asr_delay.count() > 0) asr = std::make_shared<pipeline::DelayedAsr>(asr, options.asr_delay);
  pipeline::Pipeline pipe(asr, std::make_shared<pipeline::TemplateLlm>(), std::make_shared<pipeline::SyntheticTts>());

  const CompletionPolicy policy;
  const pipeline::TurnContext ctx{std::string(render_prompt(StrategyKind::BreathingExercise)), "Parent+Child",
                                  Speaker::Unknown};
  pipeline::ConversationHistory history;
  std::vector<double> gaps;
  gaps.reserve(options.turns);
  for (std::size_t i = 0; i < options.turns; ++i) {
    if (i % static_cast<std::size_t>(policy.max_turns) == 0) history.reset(i / policy.max_turns + 1);
    vad::SpeechSegment seg;
    seg.start_ms = static_cast<SessionMs>(i) * 1000;
    seg.end_ms = seg.start_ms + 800;
    auto r = pipe.run_turn(seg, ctx, history, [](const pipeline::AudioChunk&) {});
    if (r.status == pipeline::TurnStatus::Completed) gaps.push_back(r.latency.response_gap());
  }
  return {summarize(gaps), options.budget_ms};
}

}  // namespace coreg::bench
