"""Success checking and metric aggregation over episode traces.

All checks are pure functions of the trace file contents, so scoring can run
offline and in parallel.  A delivery succeeds when the target object was
grasped at some point, ends up placed (not held) within 3 m of the target
character, no dangerous collision happened, and the episode stayed inside the
8-simulated-minute budget.  Both 3 m thresholds are inclusive.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .trace import Trace

SUCCESS_RADIUS_M = 3.0

FAIL_TIMEOUT = "timeout"
FAIL_COLLISION = "collision"
FAIL_WRONG_OBJECT = "wrong_object"
FAIL_NOT_DELIVERED = "not_delivered"
FAIL_PROTOCOL = "protocol_error"

_NAV_COMMANDS = ("goto_target_goal", "request_elevator")
_ARTICLES = ("a", "an", "the")


class TraceFormatError(ValueError):
    pass


@dataclass
class EpisodeResult:
    task_id: str
    success: bool
    grasp_success: bool
    human_search_success: bool
    parsing_correct: bool | None
    time_spent_min: float
    failure_reason: str | None = None

    def to_wire(self) -> dict:
        return {
            "task_id": self.task_id,
            "success": self.success,
            "grasp_success": self.grasp_success,
            "human_search_success": self.human_search_success,
            "parsing_correct": self.parsing_correct,
            "time_spent_min": self.time_spent_min,
            "failure_reason": self.failure_reason,
        }

    @staticmethod
    def from_wire(d: dict) -> "EpisodeResult":
        return EpisodeResult(
            task_id=d["task_id"],
            success=bool(d["success"]),
            grasp_success=bool(d["grasp_success"]),
            human_search_success=bool(d["human_search_success"]),
            parsing_correct=d.get("parsing_correct"),
            time_spent_min=float(d["time_spent_min"]),
            failure_reason=d.get("failure_reason"),
        )


@dataclass
class MetricsTable:
    episodes: int
    task_sr: float
    parsing_sr: float | None
    manipulation_sr: float
    human_search_sr: float
    time_spent_mean: float | None

    def to_wire(self) -> dict:
        return {
            "episodes": self.episodes,
            "task_sr": self.task_sr,
            "parsing_sr": self.parsing_sr,
            "manipulation_sr": self.manipulation_sr,
            "human_search_sr": self.human_search_sr,
            "time_spent_mean": self.time_spent_mean,
        }


def _dist(a: list, b: list) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _events(trace: Trace):
    for rec in trace.ticks:
        for ev in rec.get("ev", ()):
            yield rec["t"], ev
    if trace.end is not None:
        for ev in trace.end.get("ev", ()):
            yield trace.end["t"], ev


def check_grasp(trace: Trace) -> bool:
    """Did a grasp of the task's exact target instance succeed at any point?"""
    target = trace.task.get("target_object_name")
    if target is None:
        raise TraceFormatError("trace header has no target_object_name")
    return any(ev.get("e") == "grasp" and ev.get("item") == target
               and ev.get("status") == "grasped"
               for _t, ev in _events(trace))


def check_human_search(trace: Trace) -> bool:
    """Was the robot ever within 3 m (3D, inclusive) of the target character?"""
    for rec in trace.ticks:
        if "r" not in rec or "n" not in rec:
            raise TraceFormatError(f"tick {rec.get('t')} lacks position fields")
        if _dist(rec["r"], rec["n"]) <= SUCCESS_RADIUS_M:
            return True
    return False


def _collision_happened(trace: Trace) -> bool:
    return any(ev.get("e") == "collision" for _t, ev in _events(trace))


def _grasped_any(trace: Trace) -> bool:
    return any(ev.get("e") == "grasp" and ev.get("status") == "grasped"
               for _t, ev in _events(trace))


def check_success(trace: Trace) -> EpisodeResult:
    """Full per-episode outcome, computed only from the trace."""
    if trace.end is None:
        raise TraceFormatError("trace has no end record")
    task = trace.task
    end = trace.end
    tick_dt = trace.header.get("tick_dt", 0.1)
    budget = trace.header.get("budget_ticks", 4800)
    end_tick = end["t"]
    time_spent = end_tick * tick_dt / 60.0

    grasp = check_grasp(trace)
    human = check_human_search(trace)
    collided = _collision_happened(trace)
    placed = end.get("obj_holder") not in (None, "robot")
    close = _dist(end["obj_pos"], end["npc_pos"]) <= SUCCESS_RADIUS_M
    protocol_failed = end.get("reason") == FAIL_PROTOCOL

    success = (grasp and placed and close and not collided
               and not protocol_failed and end_tick <= budget)
    reason = None
    if not success:
        if protocol_failed:
            reason = FAIL_PROTOCOL
        elif collided:
            reason = FAIL_COLLISION
        elif grasp:
            reason = FAIL_NOT_DELIVERED
        elif _grasped_any(trace):
            reason = FAIL_WRONG_OBJECT
        else:
            reason = FAIL_TIMEOUT
    return EpisodeResult(
        task_id=task.get("task_id", "?"),
        success=success,
        grasp_success=grasp,
        human_search_success=human,
        parsing_correct=None,
        time_spent_min=time_spent,
        failure_reason=reason,
    )


# ---------------------------------------------------------------------------
# Parsing score


def normalize_phrase(text: str) -> str:
    """Lowercase, trim punctuation, drop leading articles, squeeze spaces."""
    text = re.sub(r"[^\w\s-]", " ", text.lower())
    words = [w for w in text.split() if w]
    while words and words[0] in _ARTICLES:
        words.pop(0)
    return " ".join(words)


def score_parsing(reported: dict | None, truth: dict, synonyms: dict[str, str] | None = None) -> bool:
    """All five tuple fields match after normalization and synonym folding.

    ``synonyms`` maps normalized variants to their canonical normalized form
    (e.g. the de-camel-cased type id of an object to its noun phrase).
    Numbered rooms are never merged with their base name.
    """
    if reported is None:
        return False
    synonyms = synonyms or {}

    def canon(value) -> str:
        norm = normalize_phrase(str(value or ""))
        return synonyms.get(norm, norm)

    for fkey in ("obj", "recep_obj", "room_obj", "npc", "room_npc"):
        if canon(reported.get(fkey)) != canon(truth.get(fkey)):
            return False
    return True


def reported_tuple(trace: Trace) -> tuple[dict | None, bool]:
    """The parse report from the trace and whether it preceded navigation.

    Returns (tuple, valid_order).  A report is only creditable when it was
    submitted before the first navigation command.
    """
    report = None
    report_key = None
    first_nav_key = None
    for rec in trace.ticks:
        for ev in rec.get("ev", ()):
            if ev.get("e") == "parse_report" and report is None:
                report = ev.get("tuple")
                report_key = (rec["t"], ev.get("seq", 0))
        for cmd in rec.get("c", ()):
            if cmd.get("name") in _NAV_COMMANDS and first_nav_key is None:
                first_nav_key = (rec["t"], cmd.get("seq", 0))
    if report is None:
        return None, False
    if first_nav_key is not None and report_key > first_nav_key:
        return report, False
    return report, True


def evaluate_episode(trace: Trace, truth: dict | None = None,
                     synonyms: dict[str, str] | None = None) -> EpisodeResult:
    """check_success plus the parsing column when ground truth is available."""
    result = check_success(trace)
    if truth is not None:
        reported, in_order = reported_tuple(trace)
        result.parsing_correct = bool(in_order and score_parsing(reported, truth, synonyms))
    return result


# ---------------------------------------------------------------------------
# Aggregation


def aggregate(results: list[EpisodeResult]) -> MetricsTable:
    if not results:
        raise ValueError("cannot aggregate an empty result list")
    n = len(results)
    task = sum(1 for r in results if r.success)
    manip = sum(1 for r in results if r.grasp_success)
    human = sum(1 for r in results if r.human_search_success)
    parsed = [r.parsing_correct for r in results if r.parsing_correct is not None]
    parsing_sr = 100.0 * sum(1 for p in parsed if p) / len(parsed) if parsed else None
    times = [r.time_spent_min for r in results if r.success]
    return MetricsTable(
        episodes=n,
        task_sr=100.0 * task / n,
        parsing_sr=parsing_sr,
        manipulation_sr=100.0 * manip / n,
        human_search_sr=100.0 * human / n,
        time_spent_mean=sum(times) / len(times) if times else None,
    )


def render_metrics_table(table: MetricsTable, label: str = "agent") -> str:
    """Aligned text table mirroring the benchmark's metric columns."""
    headers = ["Method", "Task SR", "Parsing", "Manipulation", "Human Search", "Time Spent"]

    def fmt(v, digits=1):
        return "—" if v is None else f"{v:.{digits}f}"

    row = [label, fmt(table.task_sr), fmt(table.parsing_sr), fmt(table.manipulation_sr),
           fmt(table.human_search_sr), fmt(table.time_spent_mean, 2)]
    widths = [max(len(h), len(r)) for h, r in zip(headers, row)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
        "  ".join(r.ljust(w) for r, w in zip(row, widths)),
    ]
    return "\n".join(lines)


def save_results(results: list[EpisodeResult], path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_wire() for r in results], fh, indent=1)
        fh.write("\n")


def load_results(path: str) -> list[EpisodeResult]:
    with open(path, "r", encoding="utf-8") as fh:
        return [EpisodeResult.from_wire(d) for d in json.load(fh)]
