"""Episode traces: append-only JSONL logs, replayable bit-exactly.

A trace has one header line, one line per tick (with the dynamic state hash),
and one end line.  Replaying re-executes the recorded command sequence on a
fresh episode and compares every per-tick hash, reporting the first tick that
diverges, which doubles as tamper detection.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass


class TraceError(ValueError):
    pass


class TraceWriter:
    """Streams trace records to a file path or a file-like object."""

    def __init__(self, target):
        if isinstance(target, (str, bytes)):
            self._fh = open(target, "w", encoding="utf-8")
            self._owns = True
        else:
            self._fh = target
            self._owns = False
        self._closed = False

    def write_header(self, header: dict):
        self.write_record(header)

    def write_record(self, record: dict):
        if self._closed:
            return
        self._fh.write(json.dumps(record, separators=(",", ":")))
        self._fh.write("\n")

    def close(self):
        if self._closed:
            return
        self._closed = True
        self._fh.flush()
        if self._owns:
            self._fh.close()


@dataclass
class Trace:
    header: dict
    ticks: list[dict]
    end: dict | None

    @property
    def task(self) -> dict:
        return self.header["task"]

    @property
    def mode(self) -> str:
        return self.header.get("mode", "scored")

    def final_tick(self) -> int:
        return self.end["t"] if self.end else (self.ticks[-1]["t"] if self.ticks else 0)


def read_trace(source) -> Trace:
    """Parse a trace from a path, file object, or string buffer."""
    if isinstance(source, (str, bytes)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    elif isinstance(source, io.StringIO):
        lines = source.getvalue().splitlines()
    else:
        lines = source.readlines()
    header = None
    ticks: list[dict] = []
    end = None
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"line {n}: not valid JSON ({exc})") from exc
        kind = rec.get("kind")
        if kind == "header":
            if header is not None:
                raise TraceError(f"line {n}: duplicate header")
            header = rec
        elif kind == "tick":
            ticks.append(rec)
        elif kind == "end":
            end = rec
        else:
            raise TraceError(f"line {n}: unknown record kind {kind!r}")
    if header is None:
        raise TraceError("trace has no header record")
    return Trace(header=header, ticks=ticks, end=end)


@dataclass
class ReplayResult:
    ok: bool
    ticks_checked: int
    divergence_tick: int | None = None
    message: str = ""


def replay_trace(trace: Trace, world_source=None) -> ReplayResult:
    """Re-execute a trace's command sequence and verify every tick hash."""
    from .engine import TerminalEpisodeError, reset_episode
    from .robot import command_from_wire

    episode = reset_episode(world_source, trace.task, trace.header["seed"],
                            free_mode=trace.mode == "free")
    expected_world = trace.header.get("world_hash")
    if expected_world is not None and episode.world.state_hash() != expected_world:
        return ReplayResult(False, 0, None,
                            "world mismatch: replay world differs from the recorded one")
    checked = 0
    for rec in trace.ticks:
        for wire in rec.get("c", []):
            try:
                episode.issue(command_from_wire(wire))
            except Exception as exc:  # includes protocol/terminal errors
                return ReplayResult(False, checked, rec["t"],
                                    f"command re-issue failed at tick {rec['t']}: {exc}")
        # parse reports and privileged queries do not affect ticking
        try:
            episode.step()
        except TerminalEpisodeError:
            return ReplayResult(False, checked, rec["t"],
                                f"episode ended early before tick {rec['t']}")
        got = episode.world.tick_hash()
        if got != rec["h"]:
            return ReplayResult(False, checked, rec["t"],
                                f"hash divergence at tick {rec['t']}: {got} != {rec['h']}")
        checked += 1
    if trace.end is not None:
        if episode.phase != trace.end.get("phase") or episode.fail_reason != trace.end.get("reason"):
            return ReplayResult(False, checked, trace.end.get("t"),
                                "terminal phase differs from the recorded end record")
    return ReplayResult(True, checked, None, f"OK, hashes match ({checked} ticks)")
