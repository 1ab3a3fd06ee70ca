#include "coreg/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "coreg/bench.hpp"
#include "coreg/mocks.hpp"
#include "coreg/wav.hpp"

namespace coreg::sim {

using nlohmann::json;
namespace fs = std::filesystem;

ScriptParseError::ScriptParseError(std::size_t line, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) + ": " + detail), line_(line) {}

namespace {

Speaker parse_human(const std::string& text) {
  if (text == "parent" || text == "Parent") return Speaker::Parent;
  if (text == "child" || text == "Child") return Speaker::Child;
  throw std::invalid_argument("speaker must be parent or child, got '" + text + "'");
}

DirectiveBody parse_body(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "utterance") {
    directive::Utterance u;
    u.speaker = parse_human(j.at("speaker").get<std::string>());
    u.text = j.value("text", "");
    u.wav_path = j.value("wav_path", "");
    if (u.text.empty() && u.wav_path.empty()) throw std::invalid_argument("utterance needs text or wav_path");
    if (j.contains("duration_ms")) {
      u.duration_ms = j["duration_ms"].get<SessionMs>();
      if (*u.duration_ms <= 0) throw std::invalid_argument("duration_ms must be positive");
    }
    if (j.contains("reply")) u.reply = j["reply"].get<std::string>();
    return u;
  }
  if (type == "touch") {
    const auto region = j.value("region", "back");
    if (region != "back" && region != "head") throw std::invalid_argument("touch region must be back or head");
    return directive::Touch{region == "head" ? behavior::TouchRegion::Head : behavior::TouchRegion::Back};
  }
  if (type == "face") {
    const double bearing = j.at("bearing").get<double>();
    behavior::SensorEvent::face(bearing);
    return directive::Face{bearing};
  }
  if (type == "face_lost") return directive::FaceLost{};
  if (type == "trigger") {
    const auto text = j.contains("command") ? j["command"].get<std::string>() : j.at("strategy").get<std::string>();
    auto cmd = parse_trigger_command(text);
    if (!cmd) throw std::invalid_argument("unknown strategy or behavior code '" + text + "'");
    return directive::OperatorTrigger{*cmd};
  }
  if (type == "end") return directive::OperatorEnd{};
  if (type == "advance") return directive::Advance{};
  if (type == "reassign") return directive::Reassign{j.at("phase_index").get<std::size_t>()};
  throw std::invalid_argument("unknown directive type '" + type + "'");
}

struct Scheduled {
  SessionMs at = 0;
  SessionInput input;
  std::optional<std::string> reply;
};

vad::SpeechSegment text_segment(SessionMs start, SessionMs duration, int channel) {
  vad::SpeechSegment seg;
  seg.start_ms = start;
  seg.end_ms = start + duration;
  seg.first_frame = static_cast<std::uint64_t>(start / vad::kFrameMs);
  seg.end_frame = static_cast<std::uint64_t>((start + duration) / vad::kFrameMs);
  seg.channel = channel;
  return seg;
}

int channel_for(Speaker speaker) { return speaker == Speaker::Child ? 1 : 0; }

std::shared_ptr<pipeline::SpeakerAttributor> dyad_attributor() {
  return std::make_shared<pipeline::ChannelAttributor>(
      std::map<int, Speaker>{{0, Speaker::Parent}, {1, Speaker::Child}});
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

DyadScript parse_dyad_script(std::istream& in, const std::string& base_dir) {
  DyadScript script;
  script.base_dir = base_dir;
  std::string line;
  std::size_t lineno = 0;
  SessionMs last = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const auto j = json::parse(line);
      Directive d;
      d.line = lineno;
      d.at_ms = j.at("at_ms").get<SessionMs>();
      if (d.at_ms < 0) throw std::invalid_argument("at_ms must be non-negative");
      if (d.at_ms < last) throw std::invalid_argument("at_ms decreases");
      last = d.at_ms;
      d.body = parse_body(j);
      script.directives.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw ScriptParseError(lineno, e.what());
    }
  }
  return script;
}

DyadScript load_dyad_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScriptParseError(0, "cannot open " + path);
  return parse_dyad_script(in, fs::path(path).parent_path().string());
}

SessionMs utterance_duration(std::string_view text) noexcept {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return std::max<SessionMs>(500, static_cast<SessionMs>(words) * 250);
}

SimulationResult simulate(const DyadScript& script, const SimulationOptions& options) {
  const auto wall_start = std::chrono::steady_clock::now();

  auto asr = std::make_shared<pipeline::ScriptedAsr>("(speech)");
  std::shared_ptr<pipeline::ScriptedLlm> scripted;
  std::shared_ptr<pipeline::LlmBackend> llm = options.llm;
  if (!llm) {
    scripted = std::make_shared<pipeline::ScriptedLlm>();
    llm = scripted;
  }
  auto pipe = std::make_shared<pipeline::Pipeline>(asr, llm, std::make_shared<pipeline::SyntheticTts>());
  SessionEngine engine(options.session, pipe, options.prompts.value_or(PromptLibrary::builtin()), options.scripts,
                       dyad_attributor());
  engine.set_observer(options.observer);
  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    engine.set_log_writer(std::make_unique<EventLogWriter>((fs::path(*options.out_dir) / "events.jsonl").string()));
  }
  engine.start();

  std::vector<Scheduled> schedule;
  for (const auto& d : script.directives) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, directive::Utterance>) {
            if (v.wav_path.empty()) {
              auto seg = text_segment(d.at_ms, v.duration_ms.value_or(utterance_duration(v.text)),
                                      channel_for(v.speaker));
              asr->expect(seg, v.text);
              schedule.push_back({seg.end_ms, input::Speech{seg, std::nullopt}, v.reply});
              return;
            }
            auto path = fs::path(v.wav_path);
            if (path.is_relative()) path = fs::path(script.base_dir) / path;
            const auto pcm = read_wav_pcm16(path.string());
            const auto frames = vad::frames_from_pcm(pcm, static_cast<std::uint64_t>(d.at_ms / vad::kFrameMs));
            bool first = true;
            for (auto seg : vad::segment_stream(frames, options.vad)) {
              seg.channel = channel_for(v.speaker);
              if (first && !v.text.empty()) asr->expect(seg, v.text);
              const SessionMs at = seg.end_ms;
              schedule.push_back({at, input::Speech{std::move(seg), std::nullopt},
                                  first ? v.reply : std::nullopt});
              first = false;
            }
          } else if constexpr (std::is_same_v<T, directive::Touch>) {
            schedule.push_back({d.at_ms, input::Sensor{behavior::SensorEvent::touch(v.region, d.at_ms)}, {}});
          } else if constexpr (std::is_same_v<T, directive::Face>) {
            schedule.push_back({d.at_ms, input::Sensor{behavior::SensorEvent::face(v.bearing_deg, d.at_ms)}, {}});
          } else if constexpr (std::is_same_v<T, directive::FaceLost>) {
            schedule.push_back({d.at_ms, input::Sensor{behavior::SensorEvent::face_lost(d.at_ms)}, {}});
          } else if constexpr (std::is_same_v<T, directive::OperatorTrigger>) {
            schedule.push_back({d.at_ms, input::Trigger{v.command}, {}});
          } else if constexpr (std::is_same_v<T, directive::OperatorEnd>) {
            schedule.push_back({d.at_ms, input::End{}, {}});
          } else if constexpr (std::is_same_v<T, directive::Advance>) {
            schedule.push_back({d.at_ms, input::Advance{}, {}});
          } else {
            schedule.push_back({d.at_ms, input::Reassign{v.phase_index}, {}});
          }
        },
        d.body);
  }
  std::stable_sort(schedule.begin(), schedule.end(),
                   [](const Scheduled& a, const Scheduled& b) { return a.at < b.at; });

  SessionMs end_at = 0;
  for (const auto& item : schedule) {
    if (options.compression > 0) {
      std::this_thread::sleep_until(wall_start + std::chrono::duration<double, std::milli>(
                                                     static_cast<double>(item.at) / options.compression));
    }
    if (item.reply && scripted) scripted->push(*item.reply);
    engine.handle(item.input, item.at);
    if (scripted) scripted->clear();
    end_at = std::max(end_at, item.at);
  }
  while (engine.phase() != GamePhase::Debrief) engine.handle(input::Advance{}, end_at);
  engine.advance_to(end_at);

  SimulationResult result;
  result.events = engine.events();
  result.metrics = session_metrics(engine);
  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall_start).count();
  result.metrics["wall_ms"] = result.wall_ms;
  if (options.out_dir) write_json_file(fs::path(*options.out_dir) / "metrics.json", result.metrics);
  return result;
}

json session_metrics(const SessionEngine& engine) {
  json by_kind = json::object();
  for (auto kind : kActiveStrategies) by_kind[std::string(to_string(kind))] = 0;
  json reasons = json::object();
  std::size_t episodes = 0, preemptions = 0, robot_turns = 0, human_entries = 0, rejected = 0;
  SessionMs episode_time = 0;
  SessionMs active_since = -1;
  for (const auto& ev : engine.events()) {
    switch (ev.kind) {
      case EventKind::InterventionTriggered:
        ++episodes;
        by_kind[ev.payload.at("kind").get<std::string>()] = by_kind[ev.payload.at("kind").get<std::string>()].get<int>() + 1;
        if (active_since < 0) active_since = ev.ts;
        break;
      case EventKind::InterventionPreempted:
        ++preemptions;
        break;
      case EventKind::InterventionCompleted: {
        const auto reason = ev.payload.at("reason").get<std::string>();
        reasons[reason] = reasons.value(reason, 0) + 1;
        if (active_since >= 0) episode_time += ev.ts - active_since;
        active_since = -1;
        break;
      }
      case EventKind::TranscriptAdded:
        if (ev.payload.at("entry").at("speaker") == "Robot") ++robot_turns;
        else ++human_entries;
        break;
      case EventKind::OperatorNote:
        if (ev.payload.value("note", "") == "command_rejected") ++rejected;
        break;
      default:
        break;
    }
  }
  json timers = engine.timer_history();
  if (engine.timer()) {
    const auto& t = *engine.timer();
    timers.push_back({{"phase", to_string(engine.phase())},
                      {"budget_ms", t.budget_ms()},
                      {"remaining_ms", t.remaining(engine.now())},
                      {"wall_elapsed_ms", t.wall_elapsed(engine.now())},
                      {"paused_ms", t.total_paused(engine.now())},
                      {"pauses", t.ledger().size()}});
  }
  std::vector<double> gaps;
  for (const auto& r : engine.latencies()) gaps.push_back(r.response_gap());
  return {{"episodes", {{"total", episodes}, {"by_kind", by_kind}, {"preemptions", preemptions}, {"completions", reasons}}},
          {"turns", {{"robot", robot_turns}, {"human_entries", human_entries}}},
          {"episode_time_ms", episode_time},
          {"timers", timers},
          {"rejected_commands", rejected},
          {"events", engine.events().size()},
          {"final_phase", to_string(engine.phase())},
          {"response_gap_ms", bench::to_json(bench::summarize(gaps))}};
}

ReplayResult replay(const std::vector<SessionEvent>& log) {
  ReplayResult result;
  if (log.empty()) return result;

  SessionConfig cfg;
  const bool started = log.front().kind == EventKind::OperatorNote &&
                       log.front().payload.value("note", "") == "session_started";
  if (started) cfg = SessionConfig::from_json(log.front().payload.at("config"));

  auto asr = std::make_shared<pipeline::ScriptedAsr>();
  auto llm = std::make_shared<pipeline::ScriptedLlm>();
  auto pipe = std::make_shared<pipeline::Pipeline>(asr, llm, std::make_shared<pipeline::SyntheticTts>());
  SessionEngine engine(cfg, pipe, PromptLibrary::builtin(), std::nullopt, dyad_attributor());
  if (started) engine.start();

  SessionMs last_ts = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    last_ts = std::max(last_ts, log[i].ts);
    const auto it = log[i].payload.find("input");
    if (it == log[i].payload.end()) continue;
    const auto in = input_from_json(*it);
    if (const auto* speech = std::get_if<input::Speech>(&in)) {
      std::optional<std::string> heard, reply;
      for (std::size_t k = i; k < log.size(); ++k) {
        if (k > i && log[k].payload.contains("input")) break;
        if (log[k].kind != EventKind::TranscriptAdded) continue;
        const auto entry = log[k].payload.at("entry").get<TranscriptEntry>();
        if (entry.source == TranscriptSource::Asr && !heard) heard = entry.text;
        if (entry.source == TranscriptSource::LlmResponse && !reply) reply = entry.text;
      }
      asr->expect(speech->segment, heard.value_or(""));
      if (reply) llm->push(*reply);
    }
    engine.handle(in, log[i].ts);
    llm->clear();
  }
  engine.advance_to(last_ts);

  result.regenerated = engine.events();
  const auto a = mask_timestamps(log);
  const auto b = mask_timestamps(result.regenerated);
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i] == b[i])) {
      result.first_difference = i;
      return result;
    }
  }
  if (a.size() != b.size()) result.first_difference = n;
  return result;
}

}  // namespace coreg::sim
