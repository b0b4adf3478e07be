import io
import json

import pytest

from deliverysim import robot as rb
from deliverysim.engine import reset_episode
from deliverysim.geometry import Vec3
from deliverysim.trace import TraceError, TraceWriter, read_trace, replay_trace


def record_episode(reference_task, seed=7, script=True):
    buf = io.StringIO()
    ep = reset_episode(None, reference_task, seed, trace=TraceWriter(buf))
    if script:
        rb.goto_target_goal(ep, Vec3(-17.625, 0.0, -5.375), 0.2)
        rb.rotate_head(ep, 1.0)
        for _ in range(30):
            if not ep.running:
                break
            ep.step()
    ep.finish_trace()
    return buf.getvalue()


def test_replay_verifies_untampered_trace(reference_task):
    text = record_episode(reference_task)
    trace = read_trace(io.StringIO(text))
    result = replay_trace(trace)
    assert result.ok, result.message
    assert result.ticks_checked == len(trace.ticks)


def test_replay_reports_divergence_at_edited_command(reference_task):
    text = record_episode(reference_task)
    lines = text.splitlines()
    edited = []
    edit_tick = None
    for line in lines:
        rec = json.loads(line)
        if rec.get("kind") == "tick" and rec.get("c") and edit_tick is None:
            for cmd in rec["c"]:
                if cmd["name"] == "goto_target_goal":
                    cmd["args"]["goal"][0] += 0.75  # tamper with the goal
                    edit_tick = rec["t"]
        edited.append(json.dumps(rec, separators=(",", ":")))
    assert edit_tick is not None
    trace = read_trace(io.StringIO("\n".join(edited)))
    result = replay_trace(trace)
    assert not result.ok
    assert result.divergence_tick is not None
    assert result.divergence_tick >= edit_tick
    assert "divergence" in result.message or "failed" in result.message


def test_replay_detects_edited_hash(reference_task):
    text = record_episode(reference_task)
    lines = [json.loads(line) for line in text.splitlines()]
    target = next(rec for rec in lines if rec["kind"] == "tick" and rec["t"] == 10)
    target["h"] = "0" * 16
    blob = "\n".join(json.dumps(rec, separators=(",", ":")) for rec in lines)
    result = replay_trace(read_trace(io.StringIO(blob)))
    assert not result.ok
    assert result.divergence_tick == 10


def test_replay_rejects_wrong_world(reference_task):
    text = record_episode(reference_task, script=False)
    lines = [json.loads(line) for line in text.splitlines()]
    lines[0]["world_hash"] = "not-the-right-world"
    blob = "\n".join(json.dumps(rec, separators=(",", ":")) for rec in lines)
    result = replay_trace(read_trace(io.StringIO(blob)))
    assert not result.ok
    assert "world" in result.message


def test_read_trace_requires_header():
    with pytest.raises(TraceError, match="header"):
        read_trace(io.StringIO('{"kind":"tick","t":1,"h":"x"}\n'))


def test_read_trace_rejects_garbage():
    with pytest.raises(TraceError):
        read_trace(io.StringIO("not json\n"))
