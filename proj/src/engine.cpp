#include "coreg/engine.hpp"

#include <algorithm>
#include <filesystem>

namespace coreg {

using nlohmann::json;

SessionConfig SessionConfig::from_json(const json& j) {
  SessionConfig cfg;
  cfg.budget_ms = j.value("budget_ms", cfg.budget_ms);
  cfg.break_ms = j.value("break_ms", cfg.break_ms);
  cfg.completion.max_turns = j.value("max_turns", cfg.completion.max_turns);
  cfg.completion.idle_timeout_ms = j.value("idle_timeout_ms", cfg.completion.idle_timeout_ms);
  cfg.barge_in = j.value("barge_in", cfg.barge_in);
  cfg.script_params.breathing_period_ms = j.value("breathing_period_ms", cfg.script_params.breathing_period_ms);
  if (auto it = j.find("participants"); it != j.end()) {
    cfg.parent_name = it->value("parent", cfg.parent_name);
    cfg.child_name = it->value("child", cfg.child_name);
  }
  if (cfg.budget_ms <= 0) throw std::invalid_argument("budget_ms must be positive");
  if (cfg.break_ms < 0) throw std::invalid_argument("break_ms must be non-negative");
  if (cfg.completion.max_turns <= 0) throw std::invalid_argument("max_turns must be positive");
  if (cfg.completion.idle_timeout_ms <= 0) throw std::invalid_argument("idle_timeout_ms must be positive");
  if (cfg.script_params.breathing_period_ms <= 0) throw std::invalid_argument("breathing_period_ms must be positive");
  return cfg;
}

json SessionConfig::to_json() const {
  return {{"budget_ms", budget_ms},
          {"break_ms", break_ms},
          {"max_turns", completion.max_turns},
          {"idle_timeout_ms", completion.idle_timeout_ms},
          {"barge_in", barge_in},
          {"breathing_period_ms", script_params.breathing_period_ms},
          {"participants", {{"parent", parent_name}, {"child", child_name}}}};
}

ScriptLibrary ScriptLibrary::builtin(const behavior::ScriptParams& params) {
  ScriptLibrary lib;
  for (auto kind : kAllStrategies) lib.scripts_[kind] = behavior::compile_script(kind, params);
  return lib;
}

ScriptLibrary ScriptLibrary::load(const std::string& dir) {
  ScriptLibrary lib;
  for (auto kind : kAllStrategies) {
    const auto path = (std::filesystem::path(dir) / (std::string(strategy_slug(kind)) + ".json")).string();
    auto script = behavior::load_script_file(path);
    if (auto problems = behavior::validate_script(script); !problems.empty()) {
      throw behavior::ScriptFormatError(path + ": " + problems.front());
    }
    lib.scripts_[kind] = std::move(script);
  }
  return lib;
}

json input_to_json(const SessionInput& in) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, input::Speech>) {
          json j{{"type", "speech"},
                 {"start_ms", v.segment.start_ms},
                 {"end_ms", v.segment.end_ms},
                 {"channel", v.segment.channel}};
          if (v.speaker) j["speaker"] = to_string(*v.speaker);
          return j;
        } else if constexpr (std::is_same_v<T, input::Sensor>) {
          return {{"type", "sensor"}, {"event", behavior::sensor_to_json(v.event)}};
        } else if constexpr (std::is_same_v<T, input::Trigger>) {
          return {{"type", "trigger"}, {"command", to_string(v.command)}};
        } else if constexpr (std::is_same_v<T, input::End>) {
          return {{"type", "end"}};
        } else if constexpr (std::is_same_v<T, input::Advance>) {
          return {{"type", "advance"}};
        } else if constexpr (std::is_same_v<T, input::Annotate>) {
          return {{"type", "annotate"}, {"entry_id", v.entry_id}, {"role", to_string(v.role)}};
        } else if constexpr (std::is_same_v<T, input::Reassign>) {
          return {{"type", "reassign"}, {"phase_index", v.phase_index}};
        } else {
          return {{"type", "speak_done"}};
        }
      },
      in);
}

SessionInput input_from_json(const json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "speech") {
      input::Speech s;
      s.segment.start_ms = j.at("start_ms").get<SessionMs>();
      s.segment.end_ms = j.at("end_ms").get<SessionMs>();
      s.segment.channel = j.value("channel", 0);
      s.segment.first_frame = static_cast<std::uint64_t>(s.segment.start_ms / vad::kFrameMs);
      s.segment.end_frame = static_cast<std::uint64_t>(s.segment.end_ms / vad::kFrameMs);
      if (j.contains("speaker")) {
        auto sp = parse_speaker(j["speaker"].get<std::string>());
        if (!sp) throw std::invalid_argument("unknown speaker");
        s.speaker = *sp;
      }
      return s;
    }
    if (type == "sensor") return input::Sensor{behavior::sensor_from_json(j.at("event"))};
    if (type == "trigger") {
      auto cmd = parse_trigger_command(j.at("command").get<std::string>());
      if (!cmd) throw std::invalid_argument("unknown trigger command");
      return input::Trigger{*cmd};
    }
    if (type == "end") return input::End{};
    if (type == "advance") return input::Advance{};
    if (type == "speak_done") return input::SpeakDone{};
    if (type == "annotate") {
      auto role = parse_speaker(j.at("role").get<std::string>());
      if (!role) throw std::invalid_argument("unknown role");
      return input::Annotate{j.at("entry_id").get<std::uint64_t>(), *role};
    }
    if (type == "reassign") return input::Reassign{j.at("phase_index").get<std::size_t>()};
    throw std::invalid_argument("unknown input type: " + type);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed input: ") + e.what());
  }
}

SessionEngine::SessionEngine(SessionConfig cfg, std::shared_ptr<pipeline::Pipeline> pipeline,
                             PromptLibrary prompts, std::optional<ScriptLibrary> scripts,
                             std::shared_ptr<pipeline::SpeakerAttributor> attributor)
    : cfg_(std::move(cfg)),
      pipeline_(std::move(pipeline)),
      prompts_(std::move(prompts)),
      scripts_(scripts ? std::move(*scripts) : ScriptLibrary::builtin(cfg_.script_params)),
      attributor_(attributor ? std::move(attributor) : std::make_shared<pipeline::UnknownAttributor>()) {
  if (!pipeline_) throw std::invalid_argument("SessionEngine needs a pipeline");
  script_ = &scripts_.script(StrategyKind::Standby);
  behavior_state_ = behavior::initial_state(*script_);
  behavior_state_.finished = true;
  behavior_state_.last = 0;
}

void SessionEngine::start() { note("session_started", {{"config", cfg_.to_json()}}); }

std::optional<SessionMs> SessionEngine::next_deadline() const {
  std::optional<SessionMs> best;
  auto consider = [&best](SessionMs t) {
    if (!best || t < *best) best = t;
  };
  if (speaking_) consider(speaking_until_);
  if (episode_.active && !speaking_) consider(episode_.active->last_activity + cfg_.completion.idle_timeout_ms);
  if (timer_ && !expiry_announced_) {
    if (auto e = timer_->expiry_at()) consider(*e);
  }
  if (break_until_) consider(*break_until_);
  if (script_) {
    if (auto d = behavior::phase_deadline(*script_, behavior_state_)) consider(script_start_ + *d);
  }
  return best;
}

void SessionEngine::advance_to(SessionMs now) {
  for (int guard = 0; guard < 100000; ++guard) {
    auto d = next_deadline();
    if (!d || *d > now) break;
    now_ = std::max(now_, *d);
    process_deadlines(now_);
  }
  now_ = std::max(now_, now);
  if (script_) tick_behavior();
}

void SessionEngine::process_deadlines(SessionMs t) {
  if (speaking_ && speaking_until_ <= t) {
    speaking_ = false;
    episode_ = episode::note_activity(episode_, speaking_until_);
  }
  if (script_) {
    if (auto d = behavior::phase_deadline(*script_, behavior_state_); d && script_start_ + *d <= t) tick_behavior();
  }
  apply(episode::idle_watchdog(episode_, t, speaking_, cfg_.completion));
  if (timer_ && !expiry_announced_) {
    if (auto e = timer_->expiry_at(); e && *e <= t) {
      expiry_announced_ = true;
      note("timer_expired", {{"phase", to_string(phase_)}, {"budget_ms", timer_->budget_ms()}});
    }
  }
  if (break_until_ && *break_until_ <= t) {
    break_until_.reset();
    note("break_over");
  }
}

HandleResult SessionEngine::handle(const SessionInput& in, SessionMs now) {
  advance_to(now);
  pending_input_ = input_to_json(in);
  HandleResult r = std::visit(
      [this](const auto& v) -> HandleResult {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, input::Speech>) return on_speech(v);
        else if constexpr (std::is_same_v<T, input::Sensor>) return on_sensor(v);
        else if constexpr (std::is_same_v<T, input::Trigger>) return on_trigger(v);
        else if constexpr (std::is_same_v<T, input::End>) return on_end();
        else if constexpr (std::is_same_v<T, input::Advance>) return on_advance();
        else if constexpr (std::is_same_v<T, input::Annotate>) return on_annotate(v);
        else if constexpr (std::is_same_v<T, input::Reassign>) return on_reassign(v);
        else return on_speak_done();
      },
      in);
  pending_input_.reset();
  return r;
}

void SessionEngine::emit(EventKind kind, json payload) {
  SessionEvent ev;
  ev.seq = ++seq_;
  ev.ts = now_;
  ev.kind = kind;
  ev.payload = std::move(payload);
  if (pending_input_) {
    ev.payload["input"] = std::move(*pending_input_);
    pending_input_.reset();
  }
  if (writer_) writer_->append(ev);
  events_.push_back(ev);
  if (observer_) observer_->on_event(events_.back());
}

void SessionEngine::note(std::string_view what, json extra) {
  extra["note"] = what;
  emit(EventKind::OperatorNote, std::move(extra));
}

HandleResult SessionEngine::reject(std::string code, std::string detail) {
  json extra{{"reason", code}, {"phase", to_string(phase_)}};
  if (!detail.empty()) extra["detail"] = detail;
  note("command_rejected", std::move(extra));
  return HandleResult::fail(std::move(code), std::move(detail));
}

void SessionEngine::apply(const EpisodeTransition& t) {
  const auto previous = episode_;
  episode_ = t.state;
  for (const auto& draft : t.events) {
    emit(draft.kind, draft.payload);
    if (draft.kind == EventKind::InterventionTriggered && t.change == EpisodeChange::Started) {
      if (timer_ && timer_->pause(now_)) {
        emit(EventKind::TimerPaused, {{"remaining_ms", timer_->remaining(now_)}, {"phase", to_string(phase_)}});
      } else {
        note("timer_protocol_violation", {{"op", "pause"}});
      }
    }
  }
  switch (t.change) {
    case EpisodeChange::None:
      return;
    case EpisodeChange::Started:
    case EpisodeChange::Switched:
      if (speaking_) {
        pipeline_->cancel_current();
        speaking_ = false;
        if (observer_) observer_->on_tts_cancel();
      }
      history_.reset(episode_.active->episode_id);
      start_script(episode_.active->kind);
      return;
    case EpisodeChange::Ended: {
      if (timer_ && timer_->resume(now_)) {
        emit(EventKind::TimerResumed, {{"remaining_ms", timer_->remaining(now_)}, {"phase", to_string(phase_)}});
      } else {
        note("timer_protocol_violation", {{"op", "resume"}});
      }
      history_.reset(previous.active ? previous.active->episode_id : 0);
      if (speaking_) {
        pipeline_->cancel_current();
        speaking_ = false;
        if (observer_) observer_->on_tts_cancel();
      }
      if (script_ && script_->transition_for(behavior_state_.phase, behavior::TriggerKind::EpisodeEnd)) {
        stimuli_.push_back({behavior::TriggerKind::EpisodeEnd, std::nullopt});
        outro_pending_ = true;
        tick_behavior();
      } else {
        start_script(StrategyKind::Standby);
      }
      return;
    }
  }
}

void SessionEngine::start_script(StrategyKind kind) {
  script_ = &scripts_.script(kind);
  behavior_state_ = behavior::initial_state(*script_);
  script_start_ = now_;
  stimuli_.clear();
  outro_pending_ = false;
  emit(EventKind::BehaviorStarted, {{"script", script_->id}, {"phase", behavior_state_.phase}});
  tick_behavior();
}

void SessionEngine::tick_behavior() {
  auto r = behavior::tick(*script_, behavior_state_, now_ - script_start_, stimuli_);
  behavior_state_ = std::move(r.state);
  if (observer_ && !r.commands.empty()) observer_->on_behavior(r.commands);
  for (const auto& phase : r.entered_phases) {
    emit(EventKind::BehaviorStarted, {{"script", script_->id}, {"phase", phase}});
  }
  if (outro_pending_ && behavior_state_.finished) start_script(StrategyKind::Standby);
}

TranscriptEntry& SessionEngine::add_transcript(Speaker speaker, std::string text, SessionMs t_start,
                                               SessionMs t_end, TranscriptSource source) {
  TranscriptEntry e;
  e.id = next_entry_id_++;
  e.speaker = speaker;
  e.text = std::move(text);
  e.t_start = std::min(t_start, t_end);
  e.t_end = t_end;
  e.source = source;
  transcript_.push_back(e);
  emit(EventKind::TranscriptAdded, {{"entry", e}});
  if (observer_) observer_->on_transcript(e);
  return transcript_.back();
}

HandleResult SessionEngine::on_speech(const input::Speech& in) {
  const auto& seg = in.segment;
  const Speaker speaker = in.speaker.value_or(attributor_->attribute(seg));
  if (pending_input_) (*pending_input_)["speaker"] = to_string(speaker);

  switch (pipeline::gate_input(speaking_, cfg_.barge_in)) {
    case pipeline::GateDecision::Suppress:
      note("speech_suppressed", {{"start_ms", seg.start_ms}, {"end_ms", seg.end_ms}});
      return {};
    case pipeline::GateDecision::AcceptWithBargeIn:
      pipeline_->cancel_current();
      speaking_ = false;
      speaking_until_ = now_;
      if (observer_) observer_->on_tts_cancel();
      note("barge_in", {{"start_ms", seg.start_ms}});
      break;
    case pipeline::GateDecision::Accept:
      break;
  }
  episode_ = episode::note_activity(episode_, now_);

  if (episode_.standby()) {
    auto asr = pipeline_->transcribe(seg);
    if (asr.text.empty()) {
      note("speech_unrecognized", {{"start_ms", seg.start_ms}, {"end_ms", seg.end_ms}});
    } else {
      add_transcript(speaker, std::move(asr.text), seg.start_ms, seg.end_ms, TranscriptSource::Asr);
    }
    return {};
  }

  const auto& ep = *episode_.active;
  const auto addressees = episode::current_addressees(episode_);
  const auto label = addressee_label(addressees);
  if (speaker == Speaker::Parent || speaker == Speaker::Child) {
    const auto role = speaker == Speaker::Parent ? ParticipantRole::Parent : ParticipantRole::Child;
    if (std::find(addressees.begin(), addressees.end(), role) == addressees.end()) {
      note("addressee_mismatch", {{"episode_id", ep.episode_id}, {"speaker", to_string(speaker)}, {"addressee", label}});
    }
  }

  pipeline::TurnContext ctx{prompts_.prompt(ep.kind), label, speaker};
  auto result = pipeline_->run_turn(seg, ctx, history_, [this](const pipeline::AudioChunk& chunk) {
    if (observer_) observer_->on_audio(chunk);
  });

  switch (result.status) {
    case pipeline::TurnStatus::Skipped:
      note("turn_skipped", {{"episode_id", ep.episode_id}, {"start_ms", seg.start_ms}});
      return {};
    case pipeline::TurnStatus::Aborted:
      if (!result.human_text.empty()) {
        add_transcript(speaker, std::move(result.human_text), seg.start_ms, seg.end_ms, TranscriptSource::Asr);
      }
      note("turn_aborted", {{"episode_id", ep.episode_id}, {"error", result.error}});
      return {};
    case pipeline::TurnStatus::Completed:
      break;
  }
  latencies_.push_back(result.latency);
  add_transcript(speaker, std::move(result.human_text), seg.start_ms, seg.end_ms, TranscriptSource::Asr);
  add_transcript(Speaker::Robot, std::move(result.robot_text), now_, now_ + result.audio_ms,
                 TranscriptSource::LlmResponse);
  if (result.audio_ms > 0) {
    speaking_ = true;
    speaking_until_ = now_ + result.audio_ms;
  }
  apply(episode::on_turn_completed(episode_, now_, cfg_.completion));
  return {};
}

HandleResult SessionEngine::on_sensor(const input::Sensor& in) {
  emit(EventKind::SensorFired, behavior::sensor_to_json(in.event));
  if (script_) {
    stimuli_.push_back(behavior::Stimulus::from_sensor(in.event));
    tick_behavior();
  }
  return {};
}

HandleResult SessionEngine::on_trigger(const input::Trigger& in) {
  if (!has_game_timer(phase_)) return reject("no_game_phase", to_string(in.command));
  auto t = episode::trigger(episode_, in.command, now_);
  const bool noop = t.change == EpisodeChange::None;
  apply(t);
  HandleResult r;
  if (noop) r.warning = "standby_noop";
  return r;
}

HandleResult SessionEngine::on_end() {
  auto t = episode::end(episode_, now_, "operator_end");
  const bool noop = t.change == EpisodeChange::None;
  apply(t);
  HandleResult r;
  if (noop) r.warning = "end_while_standby";
  return r;
}

void SessionEngine::close_timer() {
  if (!timer_) return;
  timer_history_.push_back({{"phase", to_string(phase_)},
                            {"budget_ms", timer_->budget_ms()},
                            {"remaining_ms", timer_->remaining(now_)},
                            {"wall_elapsed_ms", timer_->wall_elapsed(now_)},
                            {"paused_ms", timer_->total_paused(now_)},
                            {"pauses", timer_->ledger().size()}});
  timer_.reset();
}

HandleResult SessionEngine::on_advance() {
  const auto next = next_phase(phase_);
  if (!next) return reject("past_debrief");
  if (has_game_timer(phase_)) {
    if (episode_.active) apply(episode::end(episode_, now_, "phase_change"));
    close_timer();
  }
  break_until_.reset();
  const GamePhase from = phase_;
  phase_ = *next;
  json payload{{"from", to_string(from)}, {"to", to_string(phase_)}};
  if (has_game_timer(phase_)) {
    timer_.emplace(now_, cfg_.budget_ms);
    expiry_announced_ = false;
    roles_ = phase_ == GamePhase::Session1 || !roles_ ? RoleAssignment{} : roles_->swapped();
    payload["guide"] = to_string(roles_->guide);
    payload["builder"] = to_string(roles_->builder);
    payload["budget_ms"] = cfg_.budget_ms;
  } else if (phase_ == GamePhase::Break) {
    break_until_ = now_ + cfg_.break_ms;
    payload["break_ms"] = cfg_.break_ms;
  }
  emit(EventKind::PhaseChanged, std::move(payload));
  return {};
}

HandleResult SessionEngine::on_annotate(const input::Annotate& in) {
  auto it = std::find_if(transcript_.begin(), transcript_.end(),
                         [&](const TranscriptEntry& e) { return e.id == in.entry_id; });
  if (it == transcript_.end()) return reject("stale_entry", "no transcript entry " + std::to_string(in.entry_id));
  if (in.role != Speaker::Parent && in.role != Speaker::Child) return reject("bad_role", std::string(to_string(in.role)));
  if (it->speaker != Speaker::Unknown || it->source != TranscriptSource::Asr) {
    return reject("already_attributed", "entry " + std::to_string(in.entry_id));
  }
  it->speaker = in.role;
  note("speaker_annotated", {{"entry_id", in.entry_id}, {"speaker", to_string(in.role)}});
  if (observer_) observer_->on_transcript(*it);
  return {};
}

HandleResult SessionEngine::on_reassign(const input::Reassign& in) {
  auto t = episode::reassign_addressee(episode_, in.phase_index);
  const bool changed = episode_.active && t.state != episode_;
  apply(t);
  HandleResult r;
  if (!changed) {
    r.warning = episode_.standby() ? "reassign_while_standby" : "reassign_out_of_range";
  }
  return r;
}

HandleResult SessionEngine::on_speak_done() {
  if (!speaking_) return {};
  speaking_ = false;
  speaking_until_ = now_;
  episode_ = episode::note_activity(episode_, now_);
  note("speak_done");
  return {};
}

json SessionEngine::snapshot() const {
  json ep;
  if (episode_.active) {
    const auto& a = *episode_.active;
    ep = {{"state", "Active"},
          {"episode_id", a.episode_id},
          {"kind", to_string(a.kind)},
          {"phase_index", a.phase_index},
          {"addressee", addressee_label(episode::current_addressees(episode_))},
          {"turns_taken", a.turns_taken},
          {"started_at", a.started_at}};
  } else {
    ep = {{"state", "Standby"}};
  }
  json roles;
  if (roles_) roles = {{"guide", to_string(roles_->guide)}, {"builder", to_string(roles_->builder)}};
  return {{"now", now_},
          {"phase", to_string(phase_)},
          {"episode", ep},
          {"timer", timer_ ? timer_->snapshot(now_) : json()},
          {"roles", roles},
          {"robot", {{"speaking", speaking_}, {"script", behavior_script()}, {"behavior_phase", behavior_phase()}}}};
}

}  // namespace coreg
