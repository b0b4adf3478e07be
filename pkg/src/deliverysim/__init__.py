"""deliverysim: a deterministic in-building delivery simulator and benchmark.

A three-floor building with schedule-driven characters, interactable items,
a robot skill API over a TCP wire protocol, a template-grammar task
generator with paired language directives, and an evaluator producing the
benchmark's metric table.
"""

from .engine import Episode, reset_episode, tick_budget
from .evaluation import (EpisodeResult, MetricsTable, aggregate, check_grasp,
                         check_human_search, check_success, score_parsing)
from .geometry import Vec3, distance3d
from .robot import (GotoTargetGoal, Observation, ObjectInteraction, Observe,
                    RequestElevator, RotateHead, build_observation,
                    get_scenario_assets, goto_target_goal, object_interaction,
                    observe, request_elevator, rotate_head)
from .taskgen import (GroundTruth, generate_dataset, refine_directive,
                      render_directives, sample_need, validate_record)
from .trace import Trace, TraceWriter, read_trace, replay_trace
from .world import WorldState, default_world, load_world

__version__ = "0.1.0"

__all__ = [
    "Episode", "EpisodeResult", "GotoTargetGoal", "GroundTruth", "MetricsTable",
    "Observation", "ObjectInteraction", "Observe", "RequestElevator", "RotateHead",
    "Trace", "TraceWriter", "Vec3", "WorldState", "aggregate", "build_observation",
    "check_grasp", "check_human_search", "check_success", "default_world",
    "distance3d", "generate_dataset", "get_scenario_assets", "goto_target_goal",
    "load_world", "object_interaction", "observe", "read_trace", "refine_directive",
    "render_directives", "replay_trace", "request_elevator", "reset_episode",
    "rotate_head", "sample_need", "score_parsing", "tick_budget", "validate_record",
]
