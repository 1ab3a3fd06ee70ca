"""Python bindings for the coreg session core."""

import json

from . import _core
from ._core import (
    DecodeError,
    GameTimer,
    NoPromptForStandby,
    ScriptParseError,
    authorize,
    render_prompt,
    segment_stream,
    strategies,
    strategy_for,
    validate,
)

default_data_dir = _core.default_data_dir


def simulate(script_path, compression=0.0, out_dir=None):
    """Runs a dyad script; returns (metrics, events) with events as dicts."""
    out = json.loads(_core.simulate(script_path, compression, out_dir))
    return out["metrics"], [json.loads(line) for line in out["events"].splitlines()]


def simulate_text(script, compression=0.0):
    out = json.loads(_core.simulate_text(script, compression))
    return out["metrics"], [json.loads(line) for line in out["events"].splitlines()]


def replay(events):
    """Re-drives a log given as dicts; returns (identical, first_difference)."""
    return _core.replay("".join(json.dumps(e) + "\n" for e in events))


def bench(turns=100, asr_delay_ms=0):
    return json.loads(_core.bench(turns, asr_delay_ms))


def encode(envelope):
    return _core.canonical_message(json.dumps(envelope))


def decode(text):
    return json.loads(_core.canonical_message(text))


__all__ = [
    "DecodeError",
    "GameTimer",
    "NoPromptForStandby",
    "ScriptParseError",
    "authorize",
    "bench",
    "decode",
    "default_data_dir",
    "encode",
    "render_prompt",
    "replay",
    "segment_stream",
    "simulate",
    "simulate_text",
    "strategies",
    "strategy_for",
    "validate",
]
