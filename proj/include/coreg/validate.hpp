#pragma once

#include <string>
#include <vector>

namespace coreg {

struct CheckResult {
  std::string artifact;
  bool ok = true;
  std::string detail;
};

/// Checks a data directory: prompt fixtures against the built-in texts by
/// SHA-256, behavior scripts, dyad scripts, sample session logs and config
/// files.
std::vector<CheckResult> validate_data_dir(const std::string& dir);

/// Validates one behavior script file.
CheckResult check_behavior_file(const std::string& path);

}  // namespace coreg
