#include "coreg/session.hpp"

#include <algorithm>

namespace coreg {

std::string_view to_string(GamePhase phase) noexcept {
  switch (phase) {
    case GamePhase::Setup: return "Setup";
    case GamePhase::Session1: return "Session1";
    case GamePhase::Break: return "Break";
    case GamePhase::Session2: return "Session2";
    case GamePhase::Debrief: return "Debrief";
  }
  return "?";
}

std::optional<GamePhase> parse_game_phase(std::string_view text) noexcept {
  for (auto p : {GamePhase::Setup, GamePhase::Session1, GamePhase::Break, GamePhase::Session2,
                 GamePhase::Debrief}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::optional<GamePhase> next_phase(GamePhase phase) noexcept {
  switch (phase) {
    case GamePhase::Setup: return GamePhase::Session1;
    case GamePhase::Session1: return GamePhase::Break;
    case GamePhase::Break: return GamePhase::Session2;
    case GamePhase::Session2: return GamePhase::Debrief;
    case GamePhase::Debrief: return std::nullopt;
  }
  return std::nullopt;
}

bool has_game_timer(GamePhase phase) noexcept {
  return phase == GamePhase::Session1 || phase == GamePhase::Session2;
}

GameTimer::GameTimer(SessionMs started_at, SessionMs budget_ms)
    : started_at_(started_at), budget_(budget_ms) {}

bool GameTimer::pause(SessionMs now) {
  if (paused() || now < started_at_) return false;
  if (!ledger_.empty() && now < *ledger_.back().end) return false;
  ledger_.push_back({now, std::nullopt});
  return true;
}

bool GameTimer::resume(SessionMs now) {
  if (!paused() || now < ledger_.back().start) return false;
  ledger_.back().end = now;
  return true;
}

SessionMs GameTimer::wall_elapsed(SessionMs now) const noexcept { return std::max<SessionMs>(0, now - started_at_); }

SessionMs GameTimer::total_paused(SessionMs now) const noexcept {
  SessionMs total = 0;
  for (const auto& iv : ledger_) {
    const SessionMs end = iv.end.value_or(std::max(now, iv.start));
    total += end - iv.start;
  }
  return total;
}

SessionMs GameTimer::game_elapsed(SessionMs now) const noexcept {
  return wall_elapsed(now) - total_paused(now);
}

SessionMs GameTimer::remaining(SessionMs now) const noexcept {
  return std::max<SessionMs>(0, budget_ - game_elapsed(now));
}

std::optional<SessionMs> GameTimer::expiry_at() const noexcept {
  if (paused()) return std::nullopt;
  SessionMs closed = 0;
  for (const auto& iv : ledger_) closed += *iv.end - iv.start;
  return started_at_ + budget_ + closed;
}

nlohmann::json GameTimer::snapshot(SessionMs now) const {
  nlohmann::json ledger = nlohmann::json::array();
  for (const auto& iv : ledger_) {
    ledger.push_back({{"start", iv.start}, {"end", iv.end ? nlohmann::json(*iv.end) : nlohmann::json()}});
  }
  return {{"budget_ms", budget_},
          {"remaining_ms", remaining(now)},
          {"paused", paused()},
          {"ledger", ledger}};
}

}  // namespace coreg
