#pragma once

#include <chrono>
#include <cstddef>
#include <vector>

#include <json.hpp>

namespace coreg::bench {

struct LatencySummary {
  std::size_t count = 0;
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentile of an unsorted sample; 0 for an empty one.
double percentile(std::vector<double> samples, double p);
LatencySummary summarize(const std::vector<double>& samples);
nlohmann::json to_json(const LatencySummary& s);

struct BenchOptions {
  std::size_t turns = 100;
  double budget_ms = 50.0;
  std::chrono::milliseconds asr_delay{0};
};

struct BenchReport {
  LatencySummary response_gap;
  double budget_ms = 0.0;
  bool within_budget() const noexcept { return response_gap.count == 0 || response_gap.p95 <= budget_ms; }
};

/// Runs turns through the full cascade with zero-delay mocks (plus the
/// injected ASR delay) and measures response_gap per turn.
BenchReport run_bench(const BenchOptions& options);

}  // namespace coreg::bench
