#include "coreg/gateway/robot.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "coreg/gateway/ws.hpp"

namespace coreg::gateway {

ScheduleError::ScheduleError(std::size_t line, const std::string& detail)
    : std::runtime_error("schedule line " + std::to_string(line) + ": " + detail), line_(line) {}

std::vector<ScheduledSensor> parse_robot_schedule(std::istream& in) {
  std::vector<ScheduledSensor> out;
  std::string line;
  std::size_t lineno = 0;
  SessionMs last = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScheduledSensor s;
      s.at_ms = j.at("at_ms").get<SessionMs>();
      if (s.at_ms < last) throw std::invalid_argument("at_ms decreases");
      if (s.at_ms < 0) throw std::invalid_argument("at_ms must be non-negative");
      last = s.at_ms;
      s.event = behavior::sensor_from_json(j);
      s.event.ts = s.at_ms;
      out.push_back(s);
    } catch (const std::exception& e) {
      throw ScheduleError(lineno, e.what());
    }
  }
  return out;
}

std::vector<ScheduledSensor> load_robot_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScheduleError(0, "cannot open " + path);
  return parse_robot_schedule(in);
}

RobotStats run_simulated_robot(const std::vector<ScheduledSensor>& schedule, const RobotOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  std::string target = "/ws";
  if (!options.token.empty()) target += "?token=" + options.token;

  WsClient client;
  client.connect(options.host, options.port, target);
  const auto hello_seq = client.send(msg::Hello{ParticipantRole::Robot});
  auto first = client.receive(std::chrono::seconds(5));
  if (!first) throw std::runtime_error("no reply to hello");
  const auto* ack = std::get_if<msg::Ack>(&first->message);
  if (!ack || ack->seq != hello_seq) throw std::runtime_error("hello rejected: " + encode(*first));

  std::optional<std::ofstream> log;
  if (options.log_path) {
    const auto parent = std::filesystem::path(*options.log_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    log.emplace(*options.log_path);
  }

  RobotStats stats;
  std::mutex stats_mu;
  std::atomic<bool> done{false};
  std::thread reader([&] {
    while (!done.load() || !client.closed()) {
      auto env = client.receive(std::chrono::milliseconds(20));
      if (!env) {
        if (done.load()) break;
        continue;
      }
      std::lock_guard lock(stats_mu);
      if (log) *log << encode(*env) << '\n' << std::flush;
      switch (env->kind()) {
        case MessageKind::BehaviorCommandBatch:
          ++stats.batches;
          client.send(msg::Ack{env->seq, {}});
          break;
        case MessageKind::AudioChunk: ++stats.audio_chunks; break;
        case MessageKind::Ack: ++stats.acks; break;
        case MessageKind::Error: ++stats.errors; break;
        default: break;
      }
    }
  });

  const double scale = options.compression > 0 ? options.compression : 1.0;
  for (const auto& s : schedule) {
    std::this_thread::sleep_until(start + std::chrono::duration<double, std::milli>(static_cast<double>(s.at_ms) / scale));
    client.send(msg::SensorEventMsg{s.event}, s.at_ms);
    std::lock_guard lock(stats_mu);
    ++stats.sensors_sent;
  }
  std::this_thread::sleep_for(options.linger);
  done = true;
  reader.join();
  client.close();
  stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

}  // namespace coreg::gateway
