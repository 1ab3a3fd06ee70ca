import json
import os
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

import coreg

DATA = Path(os.environ.get("COREG_DATA_DIR", coreg.default_data_dir))
FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_mapping_and_prompts_match_fixture():
    rows = json.loads((FIXTURES / "trigger_table.json").read_text())["rows"]
    for row in rows:
        assert coreg.strategy_for(row["code"]) == row["strategy"]
        if row["prompt"] is None:
            with pytest.raises(coreg.NoPromptForStandby):
                coreg.render_prompt(row["strategy"])
        else:
            assert coreg.render_prompt(row["strategy"]) == row["prompt"]


def test_unknown_names_raise():
    with pytest.raises(ValueError):
        coreg.strategy_for("Juggling")


def test_tone_segment():
    tone = [32767 if (i // 16) % 2 == 0 else -32768 for i in range(16000)]
    pcm = [0] * 8000 + tone + [0] * 16000
    assert coreg.segment_stream(pcm, hangover_ms=300, min_speech_ms=200) == [(500, 1800)]
    assert coreg.segment_stream(pcm, hangover_ms=300, min_speech_ms=1500) == []


def test_timer_worked_example():
    t = coreg.GameTimer(0)
    assert t.pause(40_000)
    assert t.resume(70_000)
    assert t.remaining(130_000) == 800_000


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=60_000), max_size=12), st.integers(0, 60_000))
def test_timer_ledger_identity(gaps, tail):
    t = coreg.GameTimer(0)
    now = 0
    for g in gaps:
        now += g
        assert (t.resume(now) if t.paused else t.pause(now))
    probe = now + tail
    assert t.game_elapsed(probe) + t.total_paused(probe) == probe


def test_simulate_and_replay(tmp_path):
    metrics, events = coreg.simulate(str(DATA / "scripts" / "dyad_demo.jsonl"), out_dir=str(tmp_path))
    assert metrics["episodes"]["total"] == 2
    assert metrics["final_phase"] == "Debrief"
    assert (tmp_path / "events.jsonl").exists()
    assert coreg.replay(events) == (True, None)
    events[5]["payload"]["remaining_ms"] = 1
    identical, where = coreg.replay(events)
    assert not identical and where is not None


def test_script_errors_name_the_line():
    with pytest.raises(coreg.ScriptParseError, match="line 2"):
        coreg.simulate_text('{"at_ms":0,"type":"advance"}\n{broken\n')


def test_bench_reports_percentiles():
    r = coreg.bench(turns=20)
    assert r["count"] == 20
    assert r["p95"] < 50.0


def test_validate_shipped_data():
    results = coreg.validate(str(DATA))
    assert results and all(ok for _, ok, _ in results)


def test_protocol_round_trip_and_roles():
    env = {"v": 1, "seq": 3, "ts": 10, "type": "intervention_command",
           "payload": {"action": "trigger", "command": "BreathingExercise"}}
    again = coreg.decode(coreg.encode(env))
    assert again["type"] == "intervention_command"
    assert coreg.decode(coreg.encode(again)) == again
    with pytest.raises(coreg.DecodeError):
        coreg.decode("{}")
    assert coreg.authorize("Operator", "intervention_command")
    assert not coreg.authorize("Robot", "intervention_command")
    assert coreg.authorize("Robot", "sensor_event")
