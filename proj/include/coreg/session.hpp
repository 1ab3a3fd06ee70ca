#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coreg/core.hpp"

namespace coreg {

enum class GamePhase { Setup, Session1, Break, Session2, Debrief };

std::string_view to_string(GamePhase phase) noexcept;
std::optional<GamePhase> parse_game_phase(std::string_view text) noexcept;
std::optional<GamePhase> next_phase(GamePhase phase) noexcept;
/// Game timers exist only in Session1 and Session2.
bool has_game_timer(GamePhase phase) noexcept;

struct PauseInterval {
  SessionMs start = 0;
  std::optional<SessionMs> end;

  bool operator==(const PauseInterval&) const = default;
};

/// Countdown with an explicit pause ledger. All arithmetic is on integer
/// milliseconds:
///   game_elapsed = wall_elapsed - (closed pauses) - (open pause so far)
class GameTimer {
 public:
  static constexpr SessionMs kDefaultBudgetMs = 900'000;

  explicit GameTimer(SessionMs started_at = 0, SessionMs budget_ms = kDefaultBudgetMs);

  /// False (state unchanged) if already paused or `now` precedes the
  /// last ledger boundary.
  bool pause(SessionMs now);
  /// False (state unchanged) if not paused or `now` precedes the pause.
  bool resume(SessionMs now);

  bool paused() const noexcept { return !ledger_.empty() && !ledger_.back().end; }
  SessionMs budget_ms() const noexcept { return budget_; }
  SessionMs started_at() const noexcept { return started_at_; }
  const std::vector<PauseInterval>& ledger() const noexcept { return ledger_; }

  SessionMs wall_elapsed(SessionMs now) const noexcept;
  SessionMs total_paused(SessionMs now) const noexcept;
  SessionMs game_elapsed(SessionMs now) const noexcept;
  /// budget - game_elapsed, clamped at zero.
  SessionMs remaining(SessionMs now) const noexcept;
  /// Wall time at which remaining reaches zero, if the timer is running.
  std::optional<SessionMs> expiry_at() const noexcept;

  nlohmann::json snapshot(SessionMs now) const;

 private:
  SessionMs started_at_;
  SessionMs budget_;
  std::vector<PauseInterval> ledger_;
};

struct RoleAssignment {
  /// Holds the instructions.
  ParticipantRole guide = ParticipantRole::Parent;
  /// Touches the pieces.
  ParticipantRole builder = ParticipantRole::Child;

  RoleAssignment swapped() const noexcept { return {builder, guide}; }
  bool operator==(const RoleAssignment&) const = default;
};

}  // namespace coreg
