#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "coreg/bench.hpp"
#include "coreg/validate.hpp"
#include "oracles.hpp"

using namespace coreg;
namespace fs = std::filesystem;

namespace {

double rank_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  for (std::size_t k = 1; k <= v.size(); ++k) {
    if (static_cast<double>(k) * 100.0 >= p * static_cast<double>(v.size())) return v[k - 1];
  }
  return v.back();
}

fs::path copy_data(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::copy(oracle::data_dir(), dir, fs::copy_options::recursive);
  return dir;
}

const CheckResult* failure(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.ok) return &r;
  }
  return nullptr;
}

}  // namespace

TEST(Percentile, NearestRank) {
  EXPECT_EQ(bench::percentile({}, 50), 0.0);
  EXPECT_EQ(bench::percentile({5}, 95), 5.0);
  EXPECT_EQ(bench::percentile({1, 2, 3, 4}, 50), 2.0);
  EXPECT_EQ(bench::percentile({4, 3, 2, 1}, 95), 4.0);
  std::mt19937 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 60)(rng));
    for (auto& x : v) x = std::uniform_real_distribution<double>(0, 100)(rng);
    for (double p : {1.0, 50.0, 95.0, 99.0, 100.0}) ASSERT_EQ(bench::percentile(v, p), rank_oracle(v, p));
  }
}

TEST(Bench, ZeroTurns) {
  bench::BenchOptions o;
  o.turns = 0;
  auto r = bench::run_bench(o);
  EXPECT_EQ(r.response_gap.count, 0u);
  EXPECT_TRUE(r.within_budget());
}

TEST(Bench, InjectedDelayShowsUp) {
  bench::BenchOptions o;
  o.turns = 3;
  o.asr_delay = std::chrono::milliseconds(100);
  auto r = bench::run_bench(o);
  EXPECT_EQ(r.response_gap.count, 3u);
  EXPECT_GE(r.response_gap.p50, 100.0);
  EXPECT_FALSE(r.within_budget());
}

TEST(Validate, ShippedDataPasses) {
  auto results = validate_data_dir(oracle::data_dir());
  EXPECT_GE(results.size(), 13u);
  auto f = failure(results);
  EXPECT_EQ(f, nullptr) << (f ? f->artifact + ": " + f->detail : "");
}

TEST(Validate, TamperedPromptIsNamed) {
  auto dir = copy_data("coreg_validate_prompt");
  std::ofstream(dir / "prompts" / "refocus.txt", std::ios::app) << " ";
  const auto results = validate_data_dir(dir.string());
  auto f = failure(results);
  ASSERT_NE(f, nullptr);
  EXPECT_NE(f->artifact.find("refocus.txt"), std::string::npos);
  EXPECT_NE(f->detail.find("checksum"), std::string::npos) << f->detail;
  fs::remove_all(dir);
}

TEST(Validate, CyclicBehaviorIsNamed) {
  auto dir = copy_data("coreg_validate_cycle");
  fs::copy_file(oracle::fixture_dir() + "/cyclic_behavior.json", dir / "behaviors" / "refocus.json",
                fs::copy_options::overwrite_existing);
  const auto results = validate_data_dir(dir.string());
  auto f = failure(results);
  ASSERT_NE(f, nullptr);
  EXPECT_NE(f->artifact.find("refocus.json"), std::string::npos);
  EXPECT_NE(f->detail.find("raise -> blink -> nod -> raise"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Validate, MissingBehaviorIsNamed) {
  auto dir = copy_data("coreg_validate_missing");
  fs::remove(dir / "behaviors" / "standby.json");
  const auto results = validate_data_dir(dir.string());
  auto f = failure(results);
  ASSERT_NE(f, nullptr);
  EXPECT_NE(f->artifact.find("standby.json"), std::string::npos);
  fs::remove_all(dir);
}
