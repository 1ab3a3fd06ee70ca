#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coreg/core.hpp"

namespace coreg::behavior {

enum class Channel { HeadPitch, HeadYaw, EarRotate, EyelidOpenness, TailWag, BodyRotate, BackLight };

std::string_view to_string(Channel channel) noexcept;
std::optional<Channel> parse_channel(std::string_view text) noexcept;

/// [0,1] for most channels, [-1,1] for HeadYaw and BodyRotate.
std::pair<double, double> channel_range(Channel channel) noexcept;

struct ActuatorCommand {
  /// Offset from script start.
  SessionMs at_ms = 0;
  Channel channel = Channel::HeadPitch;
  double value = 0.0;
  SessionMs ramp_ms = 0;

  bool operator==(const ActuatorCommand&) const = default;
};

void to_json(nlohmann::json& j, const ActuatorCommand& cmd);
void from_json(const nlohmann::json& j, ActuatorCommand& cmd);

enum class TouchRegion { Back, Head };

struct SensorEvent {
  enum class Kind { TouchDetected, FaceDetected, FaceLost };

  Kind kind = Kind::FaceLost;
  TouchRegion region = TouchRegion::Back;
  double bearing_deg = 0.0;
  SessionMs ts = 0;

  static SensorEvent touch(TouchRegion region, SessionMs ts = 0);
  /// Throws std::invalid_argument unless bearing lies in [-90, 90].
  static SensorEvent face(double bearing_deg, SessionMs ts = 0);
  static SensorEvent face_lost(SessionMs ts = 0);

  bool operator==(const SensorEvent&) const = default;
};

/// {"type":"touch","region":"back"} / {"type":"face","bearing":30} / {"type":"face_lost"}
nlohmann::json sensor_to_json(const SensorEvent& event);
SensorEvent sensor_from_json(const nlohmann::json& j);

/// What a transition fires on. EpisodeEnd is raised by the engine when an
/// intervention completes, so a strategy can play a closing flourish.
enum class TriggerKind { Touch, Face, FaceLost, EpisodeEnd };

std::string_view to_string(TriggerKind kind) noexcept;
std::optional<TriggerKind> parse_trigger_kind(std::string_view text) noexcept;

struct Stimulus {
  TriggerKind kind = TriggerKind::Touch;
  /// Face bearing in degrees, when the stimulus carries one.
  std::optional<double> bearing_deg;

  static Stimulus from_sensor(const SensorEvent& event);
};

struct PhaseCommand {
  /// Offset from phase start.
  SessionMs at_ms = 0;
  Channel channel = Channel::HeadPitch;
  double value = 0.0;
  SessionMs ramp_ms = 0;
  /// Take the value from the entering stimulus: bearing / 90.
  bool from_bearing = false;

  bool operator==(const PhaseCommand&) const = default;
};

struct Phase {
  std::string name;
  std::vector<PhaseCommand> commands;
  bool loop = false;
  /// Loop period for looping phases; run length before `next` otherwise.
  SessionMs duration_ms = 0;
  std::optional<std::string> next;

  bool operator==(const Phase&) const = default;
};

struct Transition {
  std::string from;
  TriggerKind on = TriggerKind::Touch;
  std::string to;

  bool operator==(const Transition&) const = default;
};

struct BehaviorScript {
  std::string id;
  std::string initial;
  std::vector<Phase> phases;
  std::vector<Transition> transitions;

  const Phase* find(std::string_view name) const noexcept;
  const Transition* transition_for(std::string_view from, TriggerKind on) const noexcept;
  bool operator==(const BehaviorScript&) const = default;
};

struct ScriptParams {
  SessionMs breathing_period_ms = 6000;
  SessionMs breathing_step_ms = 500;
};

/// Canonical expression script for a strategy. Amplitudes and speeds are
/// tunable defaults.
BehaviorScript compile_script(StrategyKind kind, const ScriptParams& params = {});

struct BreathingSample {
  double head_pitch = 0.5;
  double light = 0.5;
};

/// head_pitch = light = 0.5 + 0.5 sin(2 pi t / period).
BreathingSample breathing_phase(SessionMs t_ms, SessionMs period_ms);

/// Structural problems: unknown phase references, unreachable phases,
/// cyclic `next` chains, out-of-range values, bad loop periods. Empty when
/// the script is sound.
std::vector<std::string> validate_script(const BehaviorScript& script);

class ScriptFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json script_to_json(const BehaviorScript& script);
/// Throws ScriptFormatError on schema errors (structure is not validated).
BehaviorScript script_from_json(const nlohmann::json& j);
BehaviorScript load_script_file(const std::string& path);

struct PhaseState {
  std::string phase;
  /// Script time at which the current phase started.
  SessionMs phase_start = 0;
  /// Script time of the previous tick; -1 before the first.
  SessionMs last = -1;
  std::optional<double> bound_value;
  /// A non-looping phase without `next` ran to its end.
  bool finished = false;

  bool operator==(const PhaseState&) const = default;
};

PhaseState initial_state(const BehaviorScript& script);

struct TickResult {
  std::vector<ActuatorCommand> commands;
  std::vector<std::string> entered_phases;
  PhaseState state;
};

/// Emits the commands whose script time lies in (state.last, elapsed_ms],
/// follows `next` chains, then applies at most one stimulus transition.
/// Stimuli ahead of the applied one that match nothing are dropped; the
/// rest stay in `pending` for the next tick.
TickResult tick(const BehaviorScript& script, const PhaseState& state, SessionMs elapsed_ms,
                std::deque<Stimulus>& pending);

/// Script time at which the current non-looping phase ends, if it is still
/// running.
std::optional<SessionMs> phase_deadline(const BehaviorScript& script, const PhaseState& state);

}  // namespace coreg::behavior
