#include "coreg/validate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coreg/behavior.hpp"
#include "coreg/codec.hpp"
#include "coreg/engine.hpp"
#include "coreg/events.hpp"
#include "coreg/external.hpp"
#include "coreg/intervention.hpp"
#include "coreg/simulate.hpp"

namespace coreg {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

CheckResult check_behavior_file(const std::string& path) {
  CheckResult r{path, true, {}};
  try {
    const auto script = behavior::load_script_file(path);
    const auto problems = behavior::validate_script(script);
    if (!problems.empty()) {
      r.ok = false;
      for (const auto& p : problems) r.detail += (r.detail.empty() ? "" : "; ") + p;
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.detail = e.what();
  }
  return r;
}

std::vector<CheckResult> validate_data_dir(const std::string& dir) {
  std::vector<CheckResult> out;
  const fs::path root(dir);

  for (auto kind : kActiveStrategies) {
    const auto path = root / "prompts" / (std::string(strategy_slug(kind)) + ".txt");
    CheckResult r{path.string(), true, {}};
    if (!fs::exists(path)) {
      r.ok = false;
      r.detail = "missing";
    } else {
      const auto got = sha256_hex(read_file(path));
      const auto want = sha256_hex(render_prompt(kind));
      if (got != want) {
        r.ok = false;
        r.detail = "checksum mismatch: sha256 " + got + ", expected " + want;
      } else {
        r.detail = "sha256 " + got;
      }
    }
    out.push_back(std::move(r));
  }

  for (auto kind : kAllStrategies) {
    const auto path = root / "behaviors" / (std::string(strategy_slug(kind)) + ".json");
    if (!fs::exists(path)) {
      out.push_back({path.string(), false, "missing"});
    }
  }
  for (const auto& path : files_with_extension(root / "behaviors", ".json")) {
    out.push_back(check_behavior_file(path.string()));
  }

  for (const auto& path : files_with_extension(root / "scripts", ".jsonl")) {
    CheckResult r{path.string(), true, {}};
    try {
      const auto script = sim::load_dyad_script(path.string());
      r.detail = std::to_string(script.directives.size()) + " directives";
    } catch (const std::exception& e) {
      r.ok = false;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }

  for (const auto& path : files_with_extension(root / "sample_logs", ".jsonl")) {
    CheckResult r{path.string(), true, {}};
    try {
      const auto events = read_event_log_file(path.string());
      if (auto v = validate_event_log(events)) {
        r.ok = false;
        r.detail = "event " + std::to_string(v->index) + ": " + v->message;
      } else {
        r.detail = std::to_string(events.size()) + " events";
      }
    } catch (const std::exception& e) {
      r.ok = false;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }

  for (const auto& path : files_with_extension(root / "config", ".json")) {
    CheckResult r{path.string(), true, {}};
    try {
      std::ifstream in(path);
      const auto j = nlohmann::json::parse(in);
      SessionConfig::from_json(j.value("session", nlohmann::json::object()));
      pipeline::make_backends(j.value("backends", nlohmann::json::object()));
    } catch (const std::exception& e) {
      r.ok = false;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace coreg
