#pragma once

#include <chrono>
#include <cstddef>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coreg/behavior.hpp"

namespace coreg::gateway {

struct ScheduledSensor {
  SessionMs at_ms = 0;
  behavior::SensorEvent event;
};

class ScheduleError : public std::runtime_error {
 public:
  ScheduleError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One sensor event per line: {"at_ms":3000,"type":"touch","region":"back"}.
/// Blank lines and '#' comments are skipped; offsets must not decrease.
std::vector<ScheduledSensor> parse_robot_schedule(std::istream& in);
std::vector<ScheduledSensor> load_robot_schedule(const std::string& path);

struct RobotOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  std::string token;
  /// Offsets are divided by this factor.
  double compression = 1.0;
  /// Every received envelope is appended here, one per line.
  std::optional<std::string> log_path;
  /// Time to keep listening after the last scheduled event.
  std::chrono::milliseconds linger{200};
};

struct RobotStats {
  std::size_t sensors_sent = 0;
  std::size_t batches = 0;
  std::size_t audio_chunks = 0;
  std::size_t acks = 0;
  std::size_t errors = 0;
  double wall_ms = 0.0;
};

/// Stand-in robot: connects as Robot, plays back the schedule, acknowledges
/// behavior batches and logs everything it receives. Throws ConnectError
/// or std::runtime_error if the server refuses the connection.
RobotStats run_simulated_robot(const std::vector<ScheduledSensor>& schedule, const RobotOptions& options);

}  // namespace coreg::gateway
