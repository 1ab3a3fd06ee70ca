#include <csignal>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "coreg/bench.hpp"
#include "coreg/engine.hpp"
#include "coreg/external.hpp"
#include "coreg/gateway/hub.hpp"
#include "coreg/gateway/robot.hpp"
#include "coreg/gateway/ws.hpp"
#include "coreg/simulate.hpp"
#include "coreg/validate.hpp"

#ifndef COREG_DATA_DIR
#define COREG_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string session_id() {
  const auto t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return out.str();
}

// Config file layout:
//   {"data_dir": "..", "session": {...}, "backends": {...},
//    "gateway": {"host", "port", "time_scale", "token"}, "log_dir": "sessions"}
// Relative paths resolve against the config file's directory.
fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

int cmd_run(const std::string& config_path, bool check_only) {
  using namespace coreg;
  const json cfg = read_json_file(config_path);
  const fs::path base = fs::absolute(config_path).parent_path();
  const fs::path data = resolve(base, cfg.value("data_dir", std::string(COREG_DATA_DIR)));

  SessionConfig session;
  pipeline::Backends backends;
  try {
    session = SessionConfig::from_json(cfg.value("session", json::object()));
    backends = pipeline::make_backends(cfg.value("backends", json::object()));
  } catch (const std::exception& e) {
    throw UsageError(config_path + ": " + e.what());
  }

  PromptLibrary prompts = PromptLibrary::load((data / "prompts").string());
  for (auto kind : kActiveStrategies) {
    if (prompts.prompt(kind) != render_prompt(kind)) {
      throw UsageError("prompt checksum mismatch: " + (data / "prompts" / (std::string(strategy_slug(kind)) + ".txt")).string());
    }
  }
  ScriptLibrary scripts = ScriptLibrary::load((data / "behaviors").string());

  const json gw = cfg.value("gateway", json::object());
  gateway::ServerOptions server;
  server.host = gw.value("host", server.host);
  server.port = gw.value("port", server.port);
  server.token = gw.value("token", std::string());
  if (const char* env = std::getenv("COREG_TOKEN")) server.token = env;
  gateway::LiveSession::Options live_opts;
  live_opts.time_scale = gw.value("time_scale", 1.0);
  if (live_opts.time_scale <= 0) throw UsageError(config_path + ": gateway.time_scale must be positive");

  if (check_only) {
    std::cout << "config ok: " << config_path << "\n";
    return 0;
  }

  const fs::path log_path = resolve(base, cfg.value("log_dir", std::string("sessions"))) / session_id() / "events.jsonl";

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto pipe = std::make_shared<pipeline::Pipeline>(backends.asr, backends.llm, backends.tts);
  auto engine = std::make_unique<SessionEngine>(session, pipe, prompts, scripts);
  engine->set_log_writer(std::make_unique<EventLogWriter>(log_path.string()));
  engine->start();
  gateway::LiveSession live(std::move(engine), pipe, live_opts);
  gateway::Hub hub(live);
  gateway::WsServer ws(hub, server);
  unsigned short port = 0;
  try {
    port = ws.start();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  live.start();
  std::cout << "ready ws://" << server.host << ":" << port << "/ws" << std::endl;
  std::cout << "log " << log_path.string() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "shutting down on signal " << sig << std::endl;
  ws.stop();
  live.stop();
  return 0;
}

int cmd_simulate(const std::string& script_path, double compression, const std::string& out_dir,
                 const std::string& config_path) {
  using namespace coreg;
  const auto script = sim::load_dyad_script(script_path);
  sim::SimulationOptions opts;
  opts.compression = compression;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (!config_path.empty()) {
    const json cfg = read_json_file(config_path);
    try {
      opts.session = SessionConfig::from_json(cfg.value("session", json::object()));
    } catch (const std::exception& e) {
      throw UsageError(config_path + ": " + e.what());
    }
  }
  const auto result = sim::simulate(script, opts);
  std::cout << result.metrics.dump(2) << "\n";
  if (auto v = validate_event_log(result.events)) {
    std::cerr << "event log invalid at " << v->index << ": " << v->message << "\n";
    return kExitFailure;
  }
  std::cerr << "simulated " << result.events.size() << " events in " << std::fixed << std::setprecision(1)
            << result.wall_ms << " ms\n";
  return 0;
}

int cmd_bench(std::size_t turns, double budget_ms, int asr_delay_ms) {
  coreg::bench::BenchOptions opts;
  opts.turns = turns;
  opts.budget_ms = budget_ms;
  opts.asr_delay = std::chrono::milliseconds(asr_delay_ms);
  const auto report = coreg::bench::run_bench(opts);
  const auto& s = report.response_gap;
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "turns " << s.count << "\n";
  if (s.count > 0) {
    std::cout << "response_gap_ms p50 " << s.p50 << " p95 " << s.p95 << " max " << s.max << "\n";
  }
  std::cout << "budget_ms " << budget_ms << (report.within_budget() ? " ok" : " EXCEEDED") << "\n";
  return report.within_budget() ? 0 : kExitFailure;
}

int cmd_replay(const std::string& log_path) {
  const auto log = coreg::read_event_log_file(log_path);
  const auto r = coreg::sim::replay(log);
  if (r.identical()) {
    std::cout << "identical: " << log.size() << " events\n";
    return 0;
  }
  const auto i = *r.first_difference;
  std::cout << "differs at event " << i << "\n";
  if (i < log.size()) std::cout << "  original:    " << coreg::to_jsonl(log[i]) << "\n";
  if (i < r.regenerated.size()) std::cout << "  regenerated: " << coreg::to_jsonl(r.regenerated[i]) << "\n";
  return kExitFailure;
}

int cmd_validate(const std::string& data_dir) {
  const auto results = coreg::validate_data_dir(data_dir);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.ok ? "ok   " : "FAIL ") << r.artifact;
    if (!r.ok) std::cout << ": " << r.detail;
    std::cout << "\n";
    ok = ok && r.ok;
  }
  std::cout << results.size() << " checks, " << (ok ? "all passed" : "failures") << "\n";
  return ok ? 0 : kExitFailure;
}

int cmd_robot(const std::string& schedule_path, coreg::gateway::RobotOptions opts) {
  const auto schedule = coreg::gateway::load_robot_schedule(schedule_path);
  if (const char* env = std::getenv("COREG_TOKEN"); env && opts.token.empty()) opts.token = env;
  const auto stats = coreg::gateway::run_simulated_robot(schedule, opts);
  std::cout << "sensors_sent " << stats.sensors_sent << " batches " << stats.batches << " audio_chunks "
            << stats.audio_chunks << " errors " << stats.errors << "\n";
  return stats.errors == 0 ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-regulation robot session orchestrator"};
  app.require_subcommand(1);

  std::string config_path;
  bool check_only = false;
  auto* run = app.add_subcommand("run", "Start the gateway and a live session");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_flag("--check", check_only, "Validate the config and exit");

  std::string script_path, out_dir, sim_config;
  double compression = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Run a scripted session with mock backends");
  simulate->add_option("--script", script_path, "Dyad script (JSONL)")->required();
  simulate->add_option("--compress", compression, "Wall-clock speed-up; 0 runs unthrottled")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--out", out_dir, "Write events.jsonl and metrics.json here");
  simulate->add_option("--config", sim_config, "Config file for session parameters");

  std::size_t turns = 100;
  double budget_ms = 50.0;
  int asr_delay_ms = 0;
  auto* bench = app.add_subcommand("bench", "Measure orchestration latency with mock backends");
  bench->add_option("--turns", turns, "Number of turns")->check(CLI::NonNegativeNumber);
  bench->add_option("--budget-ms", budget_ms, "p95 response gap budget")->check(CLI::NonNegativeNumber);
  bench->add_option("--asr-delay-ms", asr_delay_ms, "Injected ASR delay")->check(CLI::NonNegativeNumber);

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Re-drive a recorded session and compare logs");
  replay->add_option("--log", log_path, "Session event log")->required();

  std::string data_dir = COREG_DATA_DIR;
  auto* validate = app.add_subcommand("validate", "Check bundled prompts, scripts and logs");
  validate->add_option("--data", data_dir, "Data directory");

  std::string schedule_path;
  coreg::gateway::RobotOptions robot_opts;
  std::string robot_log;
  auto* robot = app.add_subcommand("robot", "Run the simulated robot client");
  robot->add_option("--schedule", schedule_path, "Sensor schedule (JSONL)")->required();
  robot->add_option("--host", robot_opts.host, "Gateway host");
  robot->add_option("--port", robot_opts.port, "Gateway port");
  robot->add_option("--token", robot_opts.token, "Access token");
  robot->add_option("--compress", robot_opts.compression, "Schedule speed-up")->check(CLI::PositiveNumber);
  robot->add_option("--log", robot_log, "Write received messages here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, check_only);
    if (*simulate) return cmd_simulate(script_path, compression, out_dir, sim_config);
    if (*bench) return cmd_bench(turns, budget_ms, asr_delay_ms);
    if (*replay) return cmd_replay(log_path);
    if (*validate) return cmd_validate(data_dir);
    if (*robot) {
      if (!robot_log.empty()) robot_opts.log_path = robot_log;
      return cmd_robot(schedule_path, robot_opts);
    }
  } catch (const coreg::MissingPromptFile& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const coreg::sim::ScriptParseError& e) {
    std::cerr << "error: " << script_path << ": " << e.what() << "\n";
    return kExitBadInput;
  } catch (const coreg::LogParseError& e) {
    std::cerr << "error: " << log_path << ": " << e.what() << "\n";
    return kExitBadInput;
  } catch (const coreg::behavior::ScriptFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const coreg::gateway::ScheduleError& e) {
    std::cerr << "error: " << schedule_path << ": " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
