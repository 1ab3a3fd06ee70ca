#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "coreg/bench.hpp"
#include "coreg/gateway/protocol.hpp"
#include "coreg/intervention.hpp"
#include "coreg/session.hpp"
#include "coreg/simulate.hpp"
#include "coreg/validate.hpp"
#include "coreg/vad.hpp"

namespace py = pybind11;
using namespace coreg;

namespace {

StrategyKind strategy_arg(const std::string& name) {
  auto k = parse_strategy(name);
  if (!k) throw py::value_error("unknown strategy: " + name);
  return *k;
}

std::string events_to_jsonl(const std::vector<SessionEvent>& events) {
  std::string out;
  for (const auto& e : events) out += to_jsonl(e) + "\n";
  return out;
}

std::string run_simulation(const sim::DyadScript& script, double compression, std::optional<std::string> out_dir) {
  sim::SimulationOptions o;
  o.compression = compression;
  o.out_dir = std::move(out_dir);
  auto r = sim::simulate(script, o);
  return nlohmann::json{{"metrics", r.metrics}, {"events", events_to_jsonl(r.events)}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<NoPromptForStandby>(m, "NoPromptForStandby", PyExc_LookupError);
  py::register_exception<sim::ScriptParseError>(m, "ScriptParseError", PyExc_ValueError);
  py::register_exception<gateway::DecodeError>(m, "DecodeError", PyExc_ValueError);

  m.attr("default_data_dir") = COREG_DATA_DIR;

  m.def("strategy_for", [](const std::string& code) {
    auto c = parse_behavior_code(code);
    if (!c) throw py::value_error("unknown behavior code: " + code);
    return std::string(to_string(map_behavior_to_strategy(*c)));
  });
  m.def("strategies", [] {
    std::vector<std::string> out;
    for (auto k : kAllStrategies) out.emplace_back(to_string(k));
    return out;
  });
  m.def("render_prompt", [](const std::string& strategy) { return render_prompt(strategy_arg(strategy)); });

  m.def(
      "segment_stream",
      [](const std::vector<std::int16_t>& pcm, int hangover_ms, int min_speech_ms, double threshold_db,
         double adaptation) {
        vad::VadConfig cfg;
        cfg.hangover_ms = hangover_ms;
        cfg.min_speech_ms = min_speech_ms;
        cfg.energy_threshold_db = threshold_db;
        cfg.noise_floor_adaptation = adaptation;
        cfg.validate();
        std::vector<std::pair<SessionMs, SessionMs>> out;
        for (const auto& s : vad::segment_stream(vad::frames_from_pcm(pcm), cfg)) out.emplace_back(s.start_ms, s.end_ms);
        return out;
      },
      py::arg("pcm"), py::arg("hangover_ms") = vad::VadConfig{}.hangover_ms,
      py::arg("min_speech_ms") = vad::VadConfig{}.min_speech_ms,
      py::arg("threshold_db") = vad::VadConfig{}.energy_threshold_db,
      py::arg("adaptation") = vad::VadConfig{}.noise_floor_adaptation);

  py::class_<GameTimer>(m, "GameTimer")
      .def(py::init<SessionMs, SessionMs>(), py::arg("start_ms"), py::arg("budget_ms") = GameTimer::kDefaultBudgetMs)
      .def("pause", &GameTimer::pause)
      .def("resume", &GameTimer::resume)
      .def_property_readonly("paused", &GameTimer::paused)
      .def("remaining", &GameTimer::remaining)
      .def("game_elapsed", &GameTimer::game_elapsed)
      .def("total_paused", &GameTimer::total_paused);

  m.def(
      "simulate",
      [](const std::string& path, double compression, std::optional<std::string> out_dir) {
        return run_simulation(sim::load_dyad_script(path), compression, std::move(out_dir));
      },
      py::arg("script_path"), py::arg("compression") = 0.0, py::arg("out_dir") = py::none());
  m.def(
      "simulate_text",
      [](const std::string& text, double compression) {
        std::istringstream in(text);
        return run_simulation(sim::parse_dyad_script(in), compression, std::nullopt);
      },
      py::arg("script"), py::arg("compression") = 0.0);

  m.def("replay", [](const std::string& jsonl) {
    std::istringstream in(jsonl);
    auto r = sim::replay(read_event_log(in));
    return std::make_pair(r.identical(), r.first_difference);
  });

  m.def(
      "bench",
      [](std::size_t turns, int asr_delay_ms) {
        bench::BenchOptions o;
        o.turns = turns;
        o.asr_delay = std::chrono::milliseconds(asr_delay_ms);
        py::gil_scoped_release release;
        return bench::to_json(bench::run_bench(o).response_gap).dump();
      },
      py::arg("turns") = 100, py::arg("asr_delay_ms") = 0);

  m.def("validate", [](const std::string& dir) {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& r : validate_data_dir(dir)) out.emplace_back(r.artifact, r.ok, r.detail);
    return out;
  });

  m.def("canonical_message", [](const std::string& text) { return gateway::encode(gateway::decode(text)); });
  m.def("authorize", [](const std::string& role, const std::string& type) {
    auto r = parse_participant_role(role);
    auto k = gateway::parse_type_name(type);
    if (!r || !k) throw py::value_error("unknown role or message type");
    return gateway::authorize(*r, *k);
  });
}
