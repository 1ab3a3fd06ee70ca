#include "coreg/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

namespace coreg::behavior {

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::HeadPitch: return "HeadPitch";
    case Channel::HeadYaw: return "HeadYaw";
    case Channel::EarRotate: return "EarRotate";
    case Channel::EyelidOpenness: return "EyelidOpenness";
    case Channel::TailWag: return "TailWag";
    case Channel::BodyRotate: return "BodyRotate";
    case Channel::BackLight: return "BackLight";
  }
  return "?";
}

std::optional<Channel> parse_channel(std::string_view text) noexcept {
  for (auto c : {Channel::HeadPitch, Channel::HeadYaw, Channel::EarRotate, Channel::EyelidOpenness,
                 Channel::TailWag, Channel::BodyRotate, Channel::BackLight}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::pair<double, double> channel_range(Channel channel) noexcept {
  if (channel == Channel::HeadYaw || channel == Channel::BodyRotate) return {-1.0, 1.0};
  return {0.0, 1.0};
}

void to_json(nlohmann::json& j, const ActuatorCommand& cmd) {
  j = nlohmann::json{{"at_ms", cmd.at_ms},
                     {"channel", to_string(cmd.channel)},
                     {"value", cmd.value},
                     {"ramp_ms", cmd.ramp_ms}};
}

void from_json(const nlohmann::json& j, ActuatorCommand& cmd) {
  auto channel = parse_channel(j.at("channel").get<std::string>());
  if (!channel) throw std::invalid_argument("unknown actuator channel");
  cmd.channel = *channel;
  cmd.at_ms = j.at("at_ms").get<SessionMs>();
  cmd.value = j.at("value").get<double>();
  cmd.ramp_ms = j.value("ramp_ms", SessionMs{0});
}

SensorEvent SensorEvent::touch(TouchRegion region, SessionMs ts) {
  return {Kind::TouchDetected, region, 0.0, ts};
}

SensorEvent SensorEvent::face(double bearing_deg, SessionMs ts) {
  if (!(bearing_deg >= -90.0 && bearing_deg <= 90.0)) {
    throw std::invalid_argument("face bearing must lie in [-90, 90]");
  }
  return {Kind::FaceDetected, TouchRegion::Back, bearing_deg, ts};
}

SensorEvent SensorEvent::face_lost(SessionMs ts) { return {Kind::FaceLost, TouchRegion::Back, 0.0, ts}; }

nlohmann::json sensor_to_json(const SensorEvent& event) {
  switch (event.kind) {
    case SensorEvent::Kind::TouchDetected:
      return {{"type", "touch"}, {"region", event.region == TouchRegion::Back ? "back" : "head"}};
    case SensorEvent::Kind::FaceDetected:
      return {{"type", "face"}, {"bearing", event.bearing_deg}};
    case SensorEvent::Kind::FaceLost:
      return {{"type", "face_lost"}};
  }
  return {};
}

SensorEvent sensor_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  const SessionMs ts = j.value("ts", SessionMs{0});
  if (type == "touch") {
    const auto region = j.value("region", std::string("back"));
    if (region != "back" && region != "head") throw std::invalid_argument("unknown touch region");
    return SensorEvent::touch(region == "back" ? TouchRegion::Back : TouchRegion::Head, ts);
  }
  if (type == "face") return SensorEvent::face(j.at("bearing").get<double>(), ts);
  if (type == "face_lost") return SensorEvent::face_lost(ts);
  throw std::invalid_argument("unknown sensor event type: " + type);
}

std::string_view to_string(TriggerKind kind) noexcept {
  switch (kind) {
    case TriggerKind::Touch: return "touch";
    case TriggerKind::Face: return "face";
    case TriggerKind::FaceLost: return "face_lost";
    case TriggerKind::EpisodeEnd: return "episode_end";
  }
  return "?";
}

std::optional<TriggerKind> parse_trigger_kind(std::string_view text) noexcept {
  for (auto k : {TriggerKind::Touch, TriggerKind::Face, TriggerKind::FaceLost, TriggerKind::EpisodeEnd}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

Stimulus Stimulus::from_sensor(const SensorEvent& event) {
  switch (event.kind) {
    case SensorEvent::Kind::TouchDetected: return {TriggerKind::Touch, std::nullopt};
    case SensorEvent::Kind::FaceDetected: return {TriggerKind::Face, event.bearing_deg};
    case SensorEvent::Kind::FaceLost: return {TriggerKind::FaceLost, std::nullopt};
  }
  return {};
}

const Phase* BehaviorScript::find(std::string_view name) const noexcept {
  for (const auto& p : phases) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Transition* BehaviorScript::transition_for(std::string_view from, TriggerKind on) const noexcept {
  for (const auto& t : transitions) {
    if (t.from == from && t.on == on) return &t;
  }
  return nullptr;
}

BreathingSample breathing_phase(SessionMs t_ms, SessionMs period_ms) {
  if (period_ms <= 0) throw std::invalid_argument("breathing period must be positive");
  // One phase argument drives both outputs.
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(t_ms % period_ms) /
                       static_cast<double>(period_ms);
  const double v = 0.5 + 0.5 * std::sin(phase);
  return {v, v};
}

namespace {

using C = Channel;

PhaseCommand cmd(SessionMs at, Channel ch, double value, SessionMs ramp) {
  return {at, ch, value, ramp, false};
}

BehaviorScript breathing(const ScriptParams& p) {
  Phase breathe{"breathe", {}, true, p.breathing_period_ms, std::nullopt};
  breathe.commands.push_back(cmd(0, C::EyelidOpenness, 0.8, 500));
  for (SessionMs t = 0; t < p.breathing_period_ms; t += p.breathing_step_ms) {
    const auto s = breathing_phase(t, p.breathing_period_ms);
    breathe.commands.push_back(cmd(t, C::HeadPitch, s.head_pitch, p.breathing_step_ms));
    breathe.commands.push_back(cmd(t, C::BackLight, s.light, p.breathing_step_ms));
  }
  return {"breathing_exercise", "breathe", {breathe}, {}};
}

BehaviorScript physical_touch() {
  Phase sad{"sad",
            {cmd(0, C::EyelidOpenness, 0.5, 1000), cmd(0, C::HeadPitch, 0.2, 1500),
             cmd(0, C::EarRotate, 0.2, 1000), cmd(0, C::TailWag, 0.5, 500)},
            false, 1500, std::nullopt};
  Phase enjoyment{"enjoyment",
                  {cmd(0, C::EyelidOpenness, 0.1, 150), cmd(200, C::EyelidOpenness, 1.0, 150),
                   cmd(0, C::HeadPitch, 0.6, 1000), cmd(0, C::HeadYaw, 0.3, 2000),
                   cmd(2000, C::HeadYaw, -0.3, 2000), cmd(0, C::EarRotate, 0.8, 2000),
                   cmd(2000, C::EarRotate, 0.2, 2000), cmd(0, C::BodyRotate, 0.2, 2000),
                   cmd(2000, C::BodyRotate, -0.2, 2000), cmd(0, C::TailWag, 0.7, 1000),
                   cmd(2000, C::TailWag, 0.3, 1000)},
                  true, 4000, std::nullopt};
  return {"physical_touch", "sad", {sad, enjoyment}, {{"sad", TriggerKind::Touch, "enjoyment"}}};
}

BehaviorScript positive_reinforcement() {
  Phase attentive{"attentive",
                  {cmd(0, C::HeadPitch, 0.6, 800), cmd(0, C::EyelidOpenness, 1.0, 500),
                   cmd(0, C::BackLight, 0.3, 800)},
                  false, 800, std::nullopt};
  Phase flourish{"flourish",
                 {cmd(0, C::HeadPitch, 0.9, 600), cmd(0, C::BackLight, 1.0, 400),
                  cmd(0, C::EarRotate, 0.9, 800), cmd(1000, C::EarRotate, 0.1, 800),
                  cmd(2000, C::EarRotate, 0.9, 800), cmd(3000, C::EarRotate, 0.5, 800),
                  cmd(0, C::BodyRotate, -0.3, 1000), cmd(1000, C::BodyRotate, 0.3, 1000),
                  cmd(2000, C::BodyRotate, -0.3, 1000), cmd(3000, C::BodyRotate, 0.0, 1000),
                  cmd(3600, C::BackLight, 0.0, 400)},
                 false, 4000, std::nullopt};
  return {"positive_reinforcement",
          "attentive",
          {attentive, flourish},
          {{"attentive", TriggerKind::EpisodeEnd, "flourish"}}};
}

BehaviorScript emotion_validation() {
  Phase scan{"scan",
             {cmd(0, C::HeadPitch, 0.6, 500), cmd(0, C::EyelidOpenness, 1.0, 300),
              cmd(0, C::HeadYaw, -0.8, 3000), cmd(3000, C::HeadYaw, 0.8, 3000)},
             true, 6000, std::nullopt};
  Phase gaze{"gaze_hold",
             {PhaseCommand{0, C::HeadYaw, 0.0, 400, true}, cmd(1200, C::EyelidOpenness, 0.1, 150),
              cmd(1400, C::EyelidOpenness, 1.0, 150), cmd(0, C::TailWag, 0.7, 1500),
              cmd(1500, C::TailWag, 0.3, 1500)},
             true, 3000, std::nullopt};
  return {"emotion_validation",
          "scan",
          {scan, gaze},
          {{"scan", TriggerKind::Face, "gaze_hold"},
           {"gaze_hold", TriggerKind::Face, "gaze_hold"},
           {"gaze_hold", TriggerKind::FaceLost, "scan"}}};
}

BehaviorScript refocus() {
  Phase raise{"raise", {cmd(0, C::HeadPitch, 0.9, 800), cmd(0, C::EyelidOpenness, 1.0, 300)},
              false, 1000, std::string("blink")};
  Phase blink{"blink", {cmd(0, C::EyelidOpenness, 0.2, 400), cmd(600, C::EyelidOpenness, 1.0, 400)},
              true, 3000, std::nullopt};
  return {"refocus", "raise", {raise, blink}, {}};
}

BehaviorScript standby() {
  Phase closing{"closing",
                {cmd(0, C::EyelidOpenness, 0.0, 3000), cmd(0, C::HeadPitch, 0.0, 3000),
                 cmd(0, C::HeadYaw, 0.0, 1000), cmd(0, C::BodyRotate, 0.0, 1000),
                 cmd(0, C::EarRotate, 0.2, 1000), cmd(0, C::TailWag, 0.5, 1000),
                 cmd(0, C::BackLight, 0.0, 1000)},
                false, 3000, std::nullopt};
  return {"standby", "closing", {closing}, {}};
}

double command_value(const PhaseCommand& c, const std::optional<double>& bound) {
  if (!c.from_bearing) return c.value;
  return std::clamp(bound.value_or(0.0) / 90.0, -1.0, 1.0);
}

/// Appends commands of `phase` (started at `start`) with script time in (lo, hi].
void emit(const Phase& phase, SessionMs start, SessionMs lo, SessionMs hi,
          const std::optional<double>& bound, std::vector<ActuatorCommand>& out) {
  if (hi <= lo) return;
  for (const auto& c : phase.commands) {
    const double value = command_value(c, bound);
    if (!phase.loop) {
      const SessionMs t = start + c.at_ms;
      if (t > lo && t <= hi) out.push_back({t, c.channel, value, c.ramp_ms});
      continue;
    }
    const SessionMs period = phase.duration_ms;
    SessionMs first = start + c.at_ms;
    if (first <= lo) {
      const SessionMs skip = (lo - first) / period + 1;
      first += skip * period;
    }
    for (SessionMs t = first; t <= hi; t += period) {
      out.push_back({t, c.channel, value, c.ramp_ms});
    }
  }
}

}  // namespace

BehaviorScript compile_script(StrategyKind kind, const ScriptParams& params) {
  switch (kind) {
    case StrategyKind::BreathingExercise: return breathing(params);
    case StrategyKind::PhysicalTouch: return physical_touch();
    case StrategyKind::PositiveReinforcement: return positive_reinforcement();
    case StrategyKind::EmotionValidation: return emotion_validation();
    case StrategyKind::Refocus: return refocus();
    case StrategyKind::Standby: return standby();
  }
  return standby();
}

std::vector<std::string> validate_script(const BehaviorScript& script) {
  std::vector<std::string> problems;
  std::set<std::string> names;
  for (const auto& p : script.phases) {
    if (!names.insert(p.name).second) problems.push_back("duplicate phase '" + p.name + "'");
  }
  if (!script.find(script.initial)) {
    problems.push_back("initial phase '" + script.initial + "' does not exist");
    return problems;
  }
  for (const auto& p : script.phases) {
    if (p.loop && p.duration_ms <= 0) problems.push_back("looping phase '" + p.name + "' needs a positive period");
    if (!p.loop && p.duration_ms < 0) problems.push_back("phase '" + p.name + "' has negative duration");
    if (p.next && !script.find(*p.next)) {
      problems.push_back("phase '" + p.name + "' continues to unknown phase '" + *p.next + "'");
    }
    if (p.loop && p.next) problems.push_back("looping phase '" + p.name + "' cannot have next");
    for (const auto& c : p.commands) {
      const auto [lo, hi] = channel_range(c.channel);
      if (!c.from_bearing && (c.value < lo || c.value > hi)) {
        problems.push_back("phase '" + p.name + "': " + std::string(to_string(c.channel)) +
                           " value out of range");
      }
      if (c.at_ms < 0 || c.ramp_ms < 0) problems.push_back("phase '" + p.name + "': negative time");
      if (p.loop && c.at_ms >= p.duration_ms) {
        problems.push_back("phase '" + p.name + "': command beyond loop period");
      }
    }
  }
  for (const auto& t : script.transitions) {
    if (!script.find(t.from)) problems.push_back("transition from unknown phase '" + t.from + "'");
    if (!script.find(t.to)) problems.push_back("transition to unknown phase '" + t.to + "'");
  }
  if (!problems.empty()) return problems;

  // Reachability from the initial phase.
  std::set<std::string> seen{script.initial};
  std::vector<std::string> stack{script.initial};
  while (!stack.empty()) {
    const auto name = stack.back();
    stack.pop_back();
    std::vector<std::string> succ;
    if (const auto* p = script.find(name); p->next) succ.push_back(*p->next);
    for (const auto& t : script.transitions) {
      if (t.from == name) succ.push_back(t.to);
    }
    for (auto& s : succ) {
      if (seen.insert(s).second) stack.push_back(s);
    }
  }
  for (const auto& p : script.phases) {
    if (!seen.count(p.name)) problems.push_back("phase '" + p.name + "' is unreachable");
  }

  // Automatic `next` chains must terminate.
  for (const auto& p : script.phases) {
    std::vector<std::string> chain{p.name};
    const Phase* cur = &p;
    while (cur->next) {
      auto it = std::find(chain.begin(), chain.end(), *cur->next);
      if (it != chain.end()) {
        if (it == chain.begin()) {
          std::string cycle;
          for (const auto& n : chain) cycle += n + " -> ";
          problems.push_back("cyclic next chain: " + cycle + chain.front());
        }
        break;
      }
      chain.push_back(*cur->next);
      cur = script.find(*cur->next);
    }
  }
  return problems;
}

nlohmann::json script_to_json(const BehaviorScript& script) {
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : script.phases) {
    nlohmann::json commands = nlohmann::json::array();
    for (const auto& c : p.commands) {
      nlohmann::json jc{{"at_ms", c.at_ms}, {"channel", to_string(c.channel)}, {"ramp_ms", c.ramp_ms}};
      if (c.from_bearing) {
        jc["value"] = "bearing";
      } else {
        jc["value"] = c.value;
      }
      commands.push_back(jc);
    }
    nlohmann::json jp{{"name", p.name}, {"loop", p.loop}, {"duration_ms", p.duration_ms},
                      {"commands", commands}};
    if (p.next) jp["next"] = *p.next;
    phases.push_back(jp);
  }
  nlohmann::json transitions = nlohmann::json::array();
  for (const auto& t : script.transitions) {
    transitions.push_back({{"from", t.from}, {"on", to_string(t.on)}, {"to", t.to}});
  }
  return {{"id", script.id}, {"initial", script.initial}, {"phases", phases},
          {"transitions", transitions}};
}

BehaviorScript script_from_json(const nlohmann::json& j) {
  try {
    BehaviorScript s;
    s.id = j.at("id").get<std::string>();
    s.initial = j.at("initial").get<std::string>();
    for (const auto& jp : j.at("phases")) {
      Phase p;
      p.name = jp.at("name").get<std::string>();
      p.loop = jp.value("loop", false);
      p.duration_ms = jp.value("duration_ms", SessionMs{0});
      if (jp.contains("next") && !jp["next"].is_null()) p.next = jp["next"].get<std::string>();
      for (const auto& jc : jp.value("commands", nlohmann::json::array())) {
        PhaseCommand c;
        auto channel = parse_channel(jc.at("channel").get<std::string>());
        if (!channel) throw ScriptFormatError("unknown channel in phase '" + p.name + "'");
        c.channel = *channel;
        c.at_ms = jc.at("at_ms").get<SessionMs>();
        c.ramp_ms = jc.value("ramp_ms", SessionMs{0});
        const auto& v = jc.at("value");
        if (v.is_string()) {
          if (v.get<std::string>() != "bearing") throw ScriptFormatError("unknown value binding");
          c.from_bearing = true;
        } else {
          c.value = v.get<double>();
        }
        p.commands.push_back(c);
      }
      s.phases.push_back(std::move(p));
    }
    for (const auto& jt : j.value("transitions", nlohmann::json::array())) {
      auto on = parse_trigger_kind(jt.at("on").get<std::string>());
      if (!on) throw ScriptFormatError("unknown transition trigger");
      s.transitions.push_back({jt.at("from").get<std::string>(), *on, jt.at("to").get<std::string>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ScriptFormatError(e.what());
  }
}

BehaviorScript load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScriptFormatError("cannot open " + path);
  try {
    return script_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ScriptFormatError(path + ": " + e.what());
  }
}

PhaseState initial_state(const BehaviorScript& script) { return {script.initial, 0, -1, std::nullopt, false}; }

std::optional<SessionMs> phase_deadline(const BehaviorScript& script, const PhaseState& state) {
  const auto* phase = script.find(state.phase);
  if (!phase || phase->loop || state.finished) return std::nullopt;
  return state.phase_start + phase->duration_ms;
}

TickResult tick(const BehaviorScript& script, const PhaseState& state, SessionMs elapsed_ms,
                std::deque<Stimulus>& pending) {
  TickResult r{{}, {}, state};
  auto& st = r.state;
  if (elapsed_ms < st.last) return r;

  SessionMs lo = st.last;
  // Bounded: validate_script rejects cyclic next chains, this guards the rest.
  for (int hops = 0; hops < 64; ++hops) {
    const auto* phase = script.find(st.phase);
    if (!phase || st.finished) break;
    if (phase->loop) {
      emit(*phase, st.phase_start, lo, elapsed_ms, st.bound_value, r.commands);
      break;
    }
    const SessionMs end = st.phase_start + phase->duration_ms;
    if (elapsed_ms < end) {
      emit(*phase, st.phase_start, lo, elapsed_ms, st.bound_value, r.commands);
      break;
    }
    emit(*phase, st.phase_start, lo, end, st.bound_value, r.commands);
    if (!phase->next) {
      st.finished = true;
      break;
    }
    st.phase = *phase->next;
    st.phase_start = end;
    st.bound_value.reset();
    r.entered_phases.push_back(st.phase);
    lo = end - 1;
  }

  while (!pending.empty()) {
    const Stimulus s = pending.front();
    pending.pop_front();
    const auto* t = script.transition_for(st.phase, s.kind);
    if (!t) continue;
    st.phase = t->to;
    st.phase_start = elapsed_ms;
    st.finished = false;
    st.bound_value = s.bearing_deg;
    r.entered_phases.push_back(st.phase);
    if (const auto* phase = script.find(st.phase)) {
      emit(*phase, st.phase_start, elapsed_ms - 1, elapsed_ms, st.bound_value, r.commands);
    }
    break;
  }

  st.last = elapsed_ms;
  std::stable_sort(r.commands.begin(), r.commands.end(),
                   [](const ActuatorCommand& a, const ActuatorCommand& b) { return a.at_ms < b.at_ms; });
  return r;
}

}  // namespace coreg::behavior
