"""Deterministic tick engine: schedules, elevator, robot commands, episodes.

One :class:`Episode` owns a private :class:`~deliverysim.world.WorldState` and
advances it in fixed 0.1 s ticks.  All mutation happens inside
:meth:`Episode.step`, so identical (world config, task, seed, command
sequence) inputs produce identical per-tick state hashes, which is what the
replay tooling verifies.

Collision policy: the dangerous-collision predicate is "the robot's next cell
is an obstacle, or its next position is within 0.3 m of a character".  The
robot's own motion never violates it by accident: it yields (waits, then
replans) when a character gets close to its path, and only walks into a
violation when the commanded goal itself demands it (a goal inside a wall or
on top of a character).  Characters never trigger collisions by themselves.
"""

from __future__ import annotations

import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from . import robot as rb
from .geometry import Vec3, bearing_to, distance3d, horizontal_distance
from .pathfind import astar, bfs_costs
from .world import (FREE, PORTAL, PORTAL_KIND_STAIRS, WALL, WorldState,
                    load_world)

logger = logging.getLogger(__name__)

EPISODE_MINUTES = 8
NPC_DANGER_M = 0.3      # closer than this to a character is a dangerous collision
NPC_PLAN_CLEAR_M = 0.45  # path planning keeps at least this clearance
WAIT_TICKS_BEFORE_REPLAN = 50
MAX_REPLANS = 3
ELEVATOR_WAIT_CAP = 200
INTERACT_TICKS = 20

PHASE_RUNNING = "running"
PHASE_SUCCEEDED = "succeeded"
PHASE_FAILED = "failed"

FAIL_TIMEOUT = "timeout"
FAIL_COLLISION = "collision"
FAIL_PROTOCOL = "protocol_error"


class EpisodeSetupError(ValueError):
    """Task and world disagree (unknown npc, missing object, bad time)."""


class TerminalEpisodeError(RuntimeError):
    """Raised when stepping or commanding an episode that already ended."""


class CommandInFlightError(RuntimeError):
    """A second command was issued while one is still executing."""


@dataclass
class CommandResultEnvelope:
    cmd_id: int
    kind: str  # "nav" | "interact" | "observation" | "error"
    payload: object


@dataclass
class _ActiveCommand:
    cmd_id: int
    cmd: rb.Command
    # goto state
    waypoints: list[Vec3] = field(default_factory=list)
    goal: Vec3 | None = None
    radius: float = 0.0
    pending_portal: str | None = None
    portal_ticks: int = 0
    arrived_distance: float | None = None
    wait_ticks: int = 0
    replans: int = 0
    # elevator state
    phase: str = ""
    elevator_waited: int = 0
    target_floor: int = 0
    # interaction state
    ticks_left: int = 0
    staged_result: rb.InteractResult | None = None
    staged_apply: tuple | None = None


def tick_budget(tick_dt: float) -> int:
    """Ticks in one episode (the 8-simulated-minute limit)."""
    return int(round(EPISODE_MINUTES * 60 / tick_dt))


# ---------------------------------------------------------------------------
# Schedule-driven placement (shared by reset, task generation, validation)


def scheduled_npc_placement(world: WorldState, time_of_day_s: int) -> dict[int, tuple[Vec3, int, str, str | None]]:
    """Where each character stands at a time of day, before any walking.

    Returns npc_id -> (pos, floor, action, room_id).  The anchor inside the
    scheduled room rotates with the entry index so characters spread out.
    """
    placement = {}
    for npc in world.npcs_sorted():
        profile = npc.profile
        hit = profile.entry_at(time_of_day_s)
        if hit is None:
            room = world.rooms[profile.schedule[0].room_id]
            anchor = room.anchors[0]
            placement[profile.npc_id] = (anchor, room.floor_index, "stand", room.room_id)
            continue
        idx, entry = hit
        room = world.rooms[entry.room_id]
        anchor = room.anchors[(idx + profile.npc_id) % len(room.anchors)]
        placement[profile.npc_id] = (anchor, room.floor_index, entry.action, entry.room_id)
    return placement


def reachable_cells(world: WorldState) -> dict[int, np.ndarray]:
    """Cells the robot can reach from spawn, by floor, via stairs or elevator."""
    masks = {g.floor_index: np.zeros((g.width, g.height), dtype=bool) for g in world.grids}
    spawn_grid = world.grids[0]
    start = spawn_grid.cell_of(world.robot.pos) if world.robot.floor == 0 else None
    if start is None:
        start = spawn_grid.cell_of(Vec3(0.0, 0.0, 0.0))
    frontier: deque[tuple[int, tuple[int, int]]] = deque([(0, start)])
    seeded: set[tuple[int, tuple[int, int]]] = {(0, start)}
    while frontier:
        floor, cell = frontier.popleft()
        grid = world.grids[floor]
        costs = bfs_costs(grid.walk_blocked(), cell)
        newly = costs >= 0
        masks[floor] |= newly
        # A reachable cell adjacent to a portal/door makes the far side reachable.
        for portal in world.portals.values():
            for end in (portal.a, portal.b):
                if end[0] != floor:
                    continue
                cx, cz = end[1], end[2]
                adjacent_free = any(
                    grid.in_bounds(cx + dx, cz + dz) and newly[cx + dx, cz + dz]
                    for dx, dz in ((1, 0), (-1, 0), (0, 1), (0, -1)))
                if not adjacent_free:
                    continue
                if portal.kind == PORTAL_KIND_STAIRS:
                    other = portal.other_end(floor)
                    exits = [(other[0], (other[1], other[2]))]
                else:
                    exits = [(f, tuple(c)) for f, c in world.elevator.door_cells.items() if f != floor]
                for of, ocell in exits:
                    ogrid = world.grids[of]
                    for dx, dz in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        nxt = (ocell[0] + dx, ocell[1] + dz)
                        if (ogrid.in_bounds(*nxt) and ogrid.cells[nxt] == FREE
                                and (of, nxt) not in seeded):
                            seeded.add((of, nxt))
                            frontier.append((of, nxt))
    return masks


def detect_collision(world: WorldState, next_pos: Vec3) -> tuple[str, object] | None:
    """Dangerous-collision predicate for the robot's impending position.

    Dangerous iff the cell is an obstacle (wall or furniture) or the position
    is within 0.3 m of a character on the same floor.  Portal cells are
    enterable.  Returns ("wall", cell) / ("npc", npc_id) or None.
    """
    floor = world.floor_of(next_pos)
    grid = world.grids[floor]
    cell = grid.cell_of(next_pos)
    if not grid.in_bounds(*cell) or grid.cells[cell] == WALL:
        return ("wall", cell)
    if grid.cells[cell] not in (FREE, PORTAL):
        return ("wall", cell)  # furniture blocks movement like a wall
    for npc in world.npcs_sorted():
        if npc.floor == floor and distance3d(next_pos, npc.pos) < NPC_DANGER_M:
            return ("npc", npc.profile.npc_id)
    return None


def find_grasp_cell(world: WorldState, obj_pos: Vec3, reach: dict[int, np.ndarray],
                    npc_positions: list[Vec3] | None = None,
                    max_range: float = 1.15) -> tuple[int, int] | None:
    """A reachable free cell from which the object passes the grasp gate.

    ``max_range`` leaves margin under the 1.2 m gate so the check is robust
    to standing slightly off the cell centre.  Cells too close to characters
    are rejected to keep the approach collision-free.
    """
    floor = world.floor_of(obj_pos)
    grid = world.grids[floor]
    mask = reach[floor]
    ocx, ocz = grid.cell_of(obj_pos)
    span = int(math.ceil(1.2 / grid.cell_size)) + 1
    best = None
    best_key = None
    for dx in range(-span, span + 1):
        for dz in range(-span, span + 1):
            cx, cz = ocx + dx, ocz + dz
            if not grid.in_bounds(cx, cz) or grid.cells[cx, cz] != FREE or not mask[cx, cz]:
                continue
            center = grid.center(cx, cz)
            dist = distance3d(center, obj_pos)
            if dist > max_range:
                continue
            if not world.line_of_sight(center, obj_pos):
                continue
            if npc_positions and any(distance3d(center, p) < 0.6 for p in npc_positions
                                     if abs(p.y - center.y) < world.floor_height / 2):
                continue
            key = (dist, cx, cz)
            if best_key is None or key < best_key:
                best_key = key
                best = (cx, cz)
    return best


def find_delivery_cell(world: WorldState, npc_pos: Vec3, reach: dict[int, np.ndarray],
                       npc_positions: list[Vec3] | None = None,
                       max_range: float = 2.5) -> tuple[int, int] | None:
    """A reachable free cell near the character from which to hand over."""
    floor = world.floor_of(npc_pos)
    grid = world.grids[floor]
    mask = reach[floor]
    ncx, ncz = grid.cell_of(npc_pos)
    span = int(math.ceil(max_range / grid.cell_size)) + 1
    best = None
    best_key = None
    for dx in range(-span, span + 1):
        for dz in range(-span, span + 1):
            cx, cz = ncx + dx, ncz + dz
            if not grid.in_bounds(cx, cz) or grid.cells[cx, cz] != FREE or not mask[cx, cz]:
                continue
            center = grid.center(cx, cz)
            dist = horizontal_distance(center, npc_pos)
            if dist > max_range or dist < 0.6:
                continue
            if npc_positions and any(
                    distance3d(center, p) < 0.6 for p in npc_positions
                    if abs(p.y - center.y) < world.floor_height / 2):
                continue
            key = (dist, cx, cz)
            if best_key is None or key < best_key:
                best_key = key
                best = (cx, cz)
    return best


def _stairs_route(world: WorldState, from_floor: int, to_floor: int) -> list | None:
    """Sequence of stairs portals connecting two floors (BFS over floors)."""
    if from_floor == to_floor:
        return []
    adj: dict[int, list] = {}
    for portal in world.portals.values():
        if portal.kind != PORTAL_KIND_STAIRS:
            continue
        adj.setdefault(portal.a[0], []).append(portal)
        adj.setdefault(portal.b[0], []).append(portal)
    queue = deque([(from_floor, [])])
    seen = {from_floor}
    while queue:
        floor, route = queue.popleft()
        for portal in sorted(adj.get(floor, []), key=lambda p: p.portal_id):
            nxt = portal.other_end(floor)[0]
            if nxt in seen:
                continue
            if nxt == to_floor:
                return route + [portal]
            seen.add(nxt)
            queue.append((nxt, route + [portal]))
    return None


# ---------------------------------------------------------------------------
# Episode


class Episode:
    """One delivery attempt under the 8-simulated-minute budget."""

    def __init__(self, world: WorldState, task: dict, seed: int,
                 trace=None, free_mode: bool = False):
        self.world = world
        self.task = task
        self.seed = seed
        self.rng = random.Random(seed)
        self.trace = trace
        self.free_mode = free_mode
        self.phase = PHASE_RUNNING
        self.fail_reason: str | None = None
        self.budget = tick_budget(world.tick_dt)
        self.active: _ActiveCommand | None = None
        self.obs_counter = 0
        self.last_obs: rb.Observation | None = None
        self._next_cmd_id = 1
        self._seq = 0
        self._pending_cmds: list[dict] = []   # issued since last tick record
        self._pending_events: list[dict] = []
        self._pending_results: list[dict] = []
        self._results: deque[CommandResultEnvelope] = deque()
        self.target_npc_id = int(task["npc_id"])
        self.target_object = task["target_object_name"]
        if trace is not None:
            trace.write_header(self._header())

    # -- trace plumbing ----------------------------------------------------

    def _header(self) -> dict:
        return {
            "kind": "header",
            "schema_version": 1,
            "world": self.world.name,
            "world_hash": self.world.state_hash(),
            "task": self.task,
            "seed": self.seed,
            "mode": "free" if self.free_mode else "scored",
            "tick_dt": self.world.tick_dt,
            "budget_ticks": self.budget,
        }

    def _event(self, ev: dict):
        self._seq += 1
        ev["seq"] = self._seq
        self._pending_events.append(ev)
        return ev

    def _note_cmd(self, cmd_id: int, cmd: rb.Command):
        self._seq += 1
        wire = rb.command_to_wire(cmd)
        wire.update({"seq": self._seq, "cmd_id": cmd_id})
        self._pending_cmds.append(wire)

    def _note_result(self, env: CommandResultEnvelope):
        self._seq += 1
        payload = env.payload.to_wire() if hasattr(env.payload, "to_wire") else env.payload
        self._pending_results.append(
            {"seq": self._seq, "cmd_id": env.cmd_id, "kind": env.kind, "payload": payload})
        self._results.append(env)

    def note_parse_report(self, tuple_payload: dict):
        self._event({"e": "parse_report", "tuple": tuple_payload})

    def note_privileged(self, query: str):
        self._event({"e": "privileged", "query": query})

    def _write_tick_record(self):
        if self.trace is None:
            self._pending_cmds, self._pending_events, self._pending_results = [], [], []
            return
        npc = self.world.npcs[self.target_npc_id]
        rec: dict = {
            "kind": "tick",
            "t": self.world.clock.tick_index,
            "h": self.world.tick_hash(),
            "r": self.world.robot.pos.as_list(),
            "n": npc.pos.as_list(),
        }
        if self._pending_cmds:
            rec["c"] = self._pending_cmds
        if self._pending_events:
            rec["ev"] = self._pending_events
        if self._pending_results:
            rec["res"] = self._pending_results
        self.trace.write_record(rec)
        self._pending_cmds, self._pending_events, self._pending_results = [], [], []

    def finish_trace(self):
        if self.trace is None:
            return
        npc = self.world.npcs[self.target_npc_id]
        obj = self.world.items[self.target_object]
        self.trace.write_record({
            "kind": "end",
            "t": self.world.clock.tick_index,
            "phase": self.phase,
            "reason": self.fail_reason,
            "obj_holder": obj.holder,
            "obj_pos": obj.pos.as_list(),
            "npc_pos": npc.pos.as_list(),
            "ev": self._pending_events or [],
            "res": self._pending_results or [],
        })
        self._pending_cmds, self._pending_events, self._pending_results = [], [], []
        self.trace.close()

    # -- lifecycle ----------------------------------------------------------

    @property
    def running(self) -> bool:
        return self.phase == PHASE_RUNNING

    def _terminate(self, phase: str, reason: str | None):
        if not self.running:
            return
        self.phase = phase
        self.fail_reason = reason
        self._event({"e": "phase", "to": phase, "reason": reason})
        if self.active is not None:
            # The in-flight command is aborted; deliver a terminal result.
            cmd = self.active
            if isinstance(cmd.cmd, (rb.GotoTargetGoal, rb.RequestElevator)):
                status = rb.TIMEOUT if reason == FAIL_TIMEOUT else rb.BLOCKED
                goal = cmd.goal if cmd.goal is not None else self.world.robot.pos
                result = rb.NavResult(status, self.world.robot.pos,
                                      horizontal_distance(self.world.robot.pos, goal))
                self._note_result(CommandResultEnvelope(cmd.cmd_id, "nav", result))
            else:
                self._note_result(CommandResultEnvelope(
                    cmd.cmd_id, "error", {"error": f"aborted: episode {phase}"}))
            self.active = None

    def pop_result(self) -> CommandResultEnvelope | None:
        return self._results.popleft() if self._results else None

    # -- command issue -------------------------------------------------------

    def issue(self, cmd: rb.Command) -> int:
        if not self.running:
            raise TerminalEpisodeError(f"episode already {self.phase}")
        if self.active is not None:
            raise CommandInFlightError("a command is already executing")
        cmd_id = self._next_cmd_id
        self._next_cmd_id += 1
        self._note_cmd(cmd_id, cmd)

        if isinstance(cmd, rb.Observe):
            self._deliver_observation(cmd_id, cmd.camera)
            return cmd_id
        if isinstance(cmd, rb.RotateHead):
            if abs(cmd.yaw) > math.pi + 1e-9:
                self._note_result(CommandResultEnvelope(
                    cmd_id, "error", {"error": "head yaw outside [-pi, pi]"}))
                return cmd_id
            self.world.robot.head_yaw = float(cmd.yaw)
            self._deliver_observation(cmd_id, rb.CAMERA_HEAD)
            return cmd_id

        active = _ActiveCommand(cmd_id=cmd_id, cmd=cmd)
        if isinstance(cmd, rb.GotoTargetGoal):
            self._plan_goto(active)
        elif isinstance(cmd, rb.RequestElevator):
            self._plan_elevator(active)
        elif isinstance(cmd, rb.ObjectInteraction):
            self._plan_interaction(active)
        else:
            self._note_result(CommandResultEnvelope(
                cmd_id, "error", {"error": f"unknown command {cmd!r}"}))
        return cmd_id

    def run_command(self, cmd: rb.Command, max_ticks: int | None = None):
        """Issue a command and step until its result arrives."""
        cmd_id = self.issue(cmd)
        steps = 0
        while True:
            env = self.pop_result()
            if env is not None:
                if env.cmd_id != cmd_id:
                    continue
                return env.payload
            if not self.running:
                raise TerminalEpisodeError(f"episode {self.phase} with no result")
            if max_ticks is not None and steps >= max_ticks:
                raise TimeoutError(f"command did not finish within {max_ticks} ticks")
            self.step()
            steps += 1

    def _deliver_observation(self, cmd_id: int, camera: str):
        self.obs_counter += 1
        obs = rb.build_observation(self.world, camera, self.obs_counter)
        self.last_obs = obs
        self._event({"e": "observe", "camera": camera, "entities": len(obs.entities)})
        self._note_result(CommandResultEnvelope(cmd_id, "observation", obs))

    # -- planning helpers ----------------------------------------------------

    def _npc_clearance_blocked(self, floor: int) -> np.ndarray:
        """Walk mask with a safety margin stamped around each character."""
        grid = self.world.grids[floor]
        blocked = grid.walk_blocked().copy()
        reach = int(math.ceil(NPC_PLAN_CLEAR_M / grid.cell_size)) + 1
        for npc in self.world.npcs_sorted():
            if npc.floor != floor:
                continue
            ncx, ncz = grid.cell_of(npc.pos)
            for dx in range(-reach, reach + 1):
                for dz in range(-reach, reach + 1):
                    cx, cz = ncx + dx, ncz + dz
                    if grid.in_bounds(cx, cz):
                        center = grid.center(cx, cz)
                        if horizontal_distance(center, npc.pos) < NPC_PLAN_CLEAR_M:
                            blocked[cx, cz] = True
        return blocked

    def _bfs_to_any(self, blocked: np.ndarray, start: tuple[int, int],
                    targets: set[tuple[int, int]]) -> list[tuple[int, int]] | None:
        if start in targets:
            return [start]
        width, height = blocked.shape
        parent: dict[tuple[int, int], tuple[int, int]] = {start: start}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            for dx, dz in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nxt = (cell[0] + dx, cell[1] + dz)
                if not (0 <= nxt[0] < width and 0 <= nxt[1] < height):
                    continue
                if nxt in parent or blocked[nxt]:
                    continue
                parent[nxt] = cell
                if nxt in targets:
                    path = [nxt]
                    while path[-1] != start:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                queue.append(nxt)
        return None

    def _plan_goto(self, active: _ActiveCommand):
        cmd: rb.GotoTargetGoal = active.cmd
        robot = self.world.robot
        if cmd.radius <= 0:
            self._note_result(CommandResultEnvelope(
                active.cmd_id, "error", {"error": "radius must be positive"}))
            return
        goal_floor = self.world.floor_of(cmd.goal)
        if goal_floor != robot.floor:
            self._note_result(CommandResultEnvelope(
                active.cmd_id, "error",
                {"error": "cross_floor_goal: use the stairs portal or request_elevator"}))
            return
        grid = self.world.grids[robot.floor]
        goal_cell = grid.cell_of(cmd.goal)
        if not grid.in_bounds(*goal_cell):
            self._note_result(CommandResultEnvelope(
                active.cmd_id, "error", {"error": "goal outside the floor map"}))
            return
        active.goal = cmd.goal
        active.radius = cmd.radius
        if horizontal_distance(robot.pos, cmd.goal) <= cmd.radius:
            self._finish_nav(active, rb.ARRIVED)
            return
        path_cells, wall_entry = self._goto_path(active)
        if path_cells is None:
            self._finish_nav(active, rb.BLOCKED)
            return
        self._set_goto_waypoints(active, path_cells, wall_entry)
        self.active = active

    def _goto_path(self, active: _ActiveCommand):
        """Plan to the cheapest free cell satisfying the goal radius.

        Returns (path, wall_entry_cell).  When the goal cell itself is an
        obstacle and nothing inside the radius is free, the robot is being
        commanded into a wall: the path leads to an adjacent cell and the
        final obstacle cell is returned separately.
        """
        robot = self.world.robot
        grid = self.world.grids[robot.floor]
        goal_cell = grid.cell_of(active.goal)
        start = grid.cell_of(robot.pos)
        walk = grid.walk_blocked()
        blocked = self._npc_clearance_blocked(robot.floor)
        blocked[start] = False

        radius_cells = int(math.ceil(active.radius / grid.cell_size)) + 1
        targets: set[tuple[int, int]] = set()
        gx, gz = goal_cell
        for dx in range(-radius_cells, radius_cells + 1):
            for dz in range(-radius_cells, radius_cells + 1):
                cx, cz = gx + dx, gz + dz
                if not grid.in_bounds(cx, cz) or walk[cx, cz]:
                    continue
                if horizontal_distance(grid.center(cx, cz), active.goal) <= active.radius:
                    targets.add((cx, cz))
        goal_free = grid.in_bounds(*goal_cell) and not walk[goal_cell]
        if goal_free:
            targets.add(goal_cell)
        for t in targets:
            blocked[t] = False

        if targets:
            path = self._bfs_to_any(blocked, start, targets)
            if path is not None:
                return path, None
            # Clearance margins may seal the way; retry on raw walls only.
            raw = walk.copy()
            raw[start] = False
            path = self._bfs_to_any(raw, start, targets)
            if path is not None:
                return path, None
            return None, None
        if not goal_free:
            # Commanded into an obstacle cell with no room to stop short.
            adjacent = {(gx + dx, gz + dz) for dx, dz in ((1, 0), (-1, 0), (0, 1), (0, -1))
                        if grid.in_bounds(gx + dx, gz + dz) and not walk[gx + dx, gz + dz]}
            if not adjacent:
                return None, None
            for t in adjacent:
                blocked[t] = False
            path = self._bfs_to_any(blocked, start, adjacent)
            if path is None:
                return None, None
            return path, goal_cell
        return None, None

    def _set_goto_waypoints(self, active: _ActiveCommand, path_cells, wall_entry):
        grid = self.world.grids[self.world.robot.floor]
        waypoints = [grid.center(cx, cz) for cx, cz in path_cells[1:]]
        goal_cell = grid.cell_of(active.goal)
        if wall_entry is not None:
            waypoints.append(grid.center(*wall_entry))
        elif path_cells and path_cells[-1] == goal_cell:
            # Finish exactly on the goal point inside its free cell.
            waypoints.append(Vec3(active.goal.x, grid.origin.y, active.goal.z))
        active.waypoints = waypoints
        if not waypoints:
            self._finish_nav(active, rb.ARRIVED)

    def _finish_nav(self, active: _ActiveCommand, status: str):
        robot = self.world.robot
        dist = active.arrived_distance
        if dist is None:
            dist = horizontal_distance(robot.pos, active.goal) if active.goal else 0.0
        self._note_result(CommandResultEnvelope(
            active.cmd_id, "nav", rb.NavResult(status, robot.pos, dist)))
        if self.active is active:
            self.active = None

    def _plan_elevator(self, active: _ActiveCommand):
        cmd: rb.RequestElevator = active.cmd
        robot = self.world.robot
        ev = self.world.elevator
        if not 0 <= cmd.target_floor < len(self.world.grids):
            self._note_result(CommandResultEnvelope(
                active.cmd_id, "error", {"error": f"no floor {cmd.target_floor}"}))
            return
        grid = self.world.grids[robot.floor]
        door = ev.door_cells.get(robot.floor)
        if door is None or horizontal_distance(robot.pos, grid.center(*door)) > 1.0:
            self._note_result(CommandResultEnvelope(
                active.cmd_id, "error",
                {"error": "not at an elevator door (must be within 1 m)"}))
            return
        if cmd.target_floor == robot.floor:
            active.goal = robot.pos
            active.arrived_distance = 0.0
            self._finish_nav(active, rb.ARRIVED)
            return
        active.phase = "call"
        active.target_floor = cmd.target_floor
        active.goal = self.world.grids[cmd.target_floor].center(*ev.door_cells[cmd.target_floor])
        self.active = active

    def _plan_interaction(self, active: _ActiveCommand):
        cmd: rb.ObjectInteraction = active.cmd
        result, apply = self._gate_interaction(cmd)
        active.staged_result = result
        active.staged_apply = apply
        active.ticks_left = INTERACT_TICKS
        self.active = active

    def _gate_interaction(self, cmd: rb.ObjectInteraction):
        """Evaluate the interaction gate at command time."""
        world = self.world
        robot = world.robot
        if cmd.manipulation == rb.GRASP:
            ent = self._resolve_ref(cmd.target_ref)
            if ent is None or ent.kind != "item":
                return rb.InteractResult(rb.WRONG_TARGET), None
            item = world.items.get(ent.name)
            if item is None or not item.graspable:
                return rb.InteractResult(rb.WRONG_TARGET), None
            if robot.held_item is not None:
                return rb.InteractResult(rb.HANDS_FULL), None
            if distance3d(robot.pos, item.pos) > float(world.robot_config.get("grasp_range", 1.2)):
                return rb.InteractResult(rb.OUT_OF_RANGE), None
            if world.item_enclosed(item) or not world.line_of_sight(robot.pos, item.pos):
                return rb.InteractResult(rb.NO_LINE_OF_SIGHT), None
            return rb.InteractResult(rb.GRASPED, item.name), ("grasp", item.name)
        # place
        if robot.held_item is None:
            return rb.InteractResult(rb.EMPTY_HAND), None
        item_name = robot.held_item
        if cmd.floor_pos is not None:
            grid = world.grids[robot.floor]
            point = Vec3(float(cmd.floor_pos[0]), grid.origin.y, float(cmd.floor_pos[1]))
            cell = grid.cell_of(point)
            if not grid.in_bounds(*cell) or grid.cells[cell] != FREE:
                return rb.InteractResult(rb.WRONG_TARGET), None
            if distance3d(robot.pos, point) > float(world.robot_config.get("grasp_range", 1.2)):
                return rb.InteractResult(rb.OUT_OF_RANGE), None
            if not world.line_of_sight(robot.pos, point):
                return rb.InteractResult(rb.NO_LINE_OF_SIGHT), None
            return (rb.InteractResult(rb.PLACED, item_name),
                    ("place", item_name, point, "world"))
        ent = self._resolve_ref(cmd.target_ref)
        if ent is None or ent.kind != "receptacle":
            return rb.InteractResult(rb.WRONG_TARGET), None
        rec = world.receptacles[ent.type]
        room = world.rooms[rec.room_id]
        grid = world.grids[room.floor_index]
        x0, z0, x1, z1 = rec.rect
        # Nearest point on the surface to the robot.
        px = min(max(robot.pos.x, grid.origin.x + x0 * grid.cell_size + 0.05),
                 grid.origin.x + (x1 + 1) * grid.cell_size - 0.05)
        pz = min(max(robot.pos.z, grid.origin.z + z0 * grid.cell_size + 0.05),
                 grid.origin.z + (z1 + 1) * grid.cell_size - 0.05)
        point = Vec3(px, room.floor_index * world.floor_height + rec.surface_height, pz)
        if distance3d(robot.pos, point) > float(world.robot_config.get("grasp_range", 1.2)):
            return rb.InteractResult(rb.OUT_OF_RANGE), None
        if not world.line_of_sight(robot.pos, point):
            return rb.InteractResult(rb.NO_LINE_OF_SIGHT), None
        return (rb.InteractResult(rb.PLACED, item_name),
                ("place", item_name, point, rec.receptacle_id))

    def _resolve_ref(self, ref: str | None):
        if ref is None or self.last_obs is None:
            return None
        for ent in self.last_obs.entities:
            if ent.entity_ref == ref:
                return ent
        return None

    # -- per-tick advancement -------------------------------------------------

    def step(self):
        """Advance the simulation one tick (0.1 s of simulated time)."""
        if not self.running:
            raise TerminalEpisodeError(f"cannot step an episode that {self.phase}")
        self.world.clock.tick_index += 1
        self._elevator_tick()
        for npc in self.world.npcs_sorted():
            self._npc_tick(npc)
        if self.active is not None:
            cmd = self.active.cmd
            if isinstance(cmd, rb.GotoTargetGoal):
                self._goto_tick(self.active)
            elif isinstance(cmd, rb.RequestElevator):
                self._elevator_command_tick(self.active)
            elif isinstance(cmd, rb.ObjectInteraction):
                self._interaction_tick(self.active)
        self._sync_held_item()
        if self.running and self.world.clock.tick_index >= self.budget:
            self._terminate(PHASE_FAILED, FAIL_TIMEOUT)
        self._write_tick_record()

    # elevator car ------------------------------------------------------------

    def _elevator_tick(self):
        ev = self.world.elevator
        timing = self.world.elevator_timing
        if ev.transit_target is not None:
            ev.transit_timer -= 1
            if ev.transit_timer <= 0:
                ev.current_floor = ev.transit_target
                ev.transit_target = None
                ev.door_open = True
                ev.door_timer = timing["door_ticks"]
                if ev.occupancy == "robot":
                    robot = self.world.robot
                    car = self.world.grids[ev.current_floor].center(*ev.car_cells[ev.current_floor])
                    robot.pos = car
                    robot.floor = ev.current_floor
            return
        if ev.door_open:
            if (ev.occupancy != "empty" and ev.occupant_target is not None
                    and ev.occupant_target != ev.current_floor):
                ev.door_open = False
                ev.door_timer = 0
                ev.transit_target = ev.occupant_target
                ev.transit_timer = timing["transit_ticks_per_floor"] * abs(
                    ev.occupant_target - ev.current_floor)
                return
            ev.door_timer -= 1
            if ev.door_timer <= 0:
                ev.door_open = False
            return
        # Idle with doors closed: serve the occupant first, then FIFO calls.
        if ev.occupancy != "empty" and ev.occupant_target is not None:
            if ev.occupant_target == ev.current_floor:
                ev.door_open = True
                ev.door_timer = timing["door_ticks"]
            else:
                ev.transit_target = ev.occupant_target
                ev.transit_timer = timing["transit_ticks_per_floor"] * abs(
                    ev.occupant_target - ev.current_floor)
            return
        if ev.pending_calls:
            call = ev.pending_calls.pop(0)
            if call == ev.current_floor:
                ev.door_open = True
                ev.door_timer = timing["door_ticks"]
            else:
                ev.transit_target = call
                ev.transit_timer = timing["transit_ticks_per_floor"] * abs(call - ev.current_floor)

    def call_elevator(self, floor: int):
        ev = self.world.elevator
        if floor not in ev.pending_calls:
            ev.pending_calls.append(floor)

    # characters ----------------------------------------------------------------

    def _npc_tick(self, npc):
        world = self.world
        if npc.waypoints or npc.pending_portal:
            self._npc_advance(npc)
            return
        tod = world.clock.time_of_day_s
        hit = npc.profile.entry_at(tod)
        if hit is None:
            if npc.action != "stand":
                npc.action = "stand"
                logger.debug("npc %s has a schedule gap at %ss; idling", npc.profile.name, tod)
            return
        idx, entry = hit
        room = world.rooms[entry.room_id]
        here = world.room_of(npc.pos)
        if here is not None and here.room_id == entry.room_id and npc.floor == room.floor_index:
            npc.action = entry.action
            npc.entry_idx = idx
            return
        if npc.entry_idx == idx and (npc.waypoints or npc.pending_portal):
            return
        npc.entry_idx = idx
        anchor = room.anchors[(idx + npc.profile.npc_id) % len(room.anchors)]
        if self._npc_plan_walk(npc, room.floor_index, anchor, entry.action):
            npc.action = "walk"
        else:
            logger.debug("npc %s cannot reach %s; idling", npc.profile.name, entry.room_id)

    def _npc_plan_walk(self, npc, dest_floor: int, dest: Vec3, after_action: str) -> bool:
        world = self.world
        route = _stairs_route(world, npc.floor, dest_floor)
        if route is None:
            return False
        grid = world.grids[npc.floor]
        start = grid.cell_of(npc.pos)
        blocked = grid.walk_blocked().copy()
        blocked[start] = False
        robot_blocked = None
        if world.robot.floor == npc.floor:
            rcell = grid.cell_of(world.robot.pos)
            if rcell != start and not blocked[rcell]:
                blocked[rcell] = True
                robot_blocked = rcell
        if route:
            portal = route[0]
            end = portal.a if portal.a[0] == npc.floor else portal.b
            goal = (end[1], end[2])
        else:
            goal = grid.cell_of(dest)
        blocked[goal] = False
        path = astar(blocked, start, goal)
        if path is None and robot_blocked is not None:
            blocked[robot_blocked] = False  # squeeze past a robot parked in a doorway
            path = astar(blocked, start, goal)
        if path is None:
            return False
        if route:
            npc.waypoints = [grid.center(cx, cz) for cx, cz in path[1:]]
            npc.pending_portal = route[0].portal_id
        else:
            npc.waypoints = [grid.center(cx, cz) for cx, cz in path[1:]] + [dest]
        npc.after_action = after_action
        npc.dest = (dest_floor, dest)
        return True

    def _npc_advance(self, npc):
        world = self.world
        if npc.portal_wait > 0:
            npc.portal_wait -= 1
            if npc.portal_wait == 0 and npc.pending_portal:
                portal = world.portals[npc.pending_portal]
                other = portal.other_end(npc.floor)
                npc.floor = other[0]
                npc.pos = world.grids[other[0]].center(other[1], other[2])
                npc.pending_portal = None
                dest_floor, dest = npc.dest
                if not self._npc_plan_walk(npc, dest_floor, dest, npc.after_action):
                    npc.action = npc.after_action
            return
        remaining = world.npc_speed * world.tick_dt
        while remaining > 1e-9 and npc.waypoints:
            nxt = npc.waypoints[0]
            seg = horizontal_distance(npc.pos, nxt)
            if seg <= remaining:
                npc.pos = nxt
                npc.waypoints.pop(0)
                remaining -= seg
            else:
                f = remaining / seg
                npc.pos = Vec3(npc.pos.x + (nxt.x - npc.pos.x) * f, npc.pos.y,
                               npc.pos.z + (nxt.z - npc.pos.z) * f)
                remaining = 0.0
        if not npc.waypoints:
            if npc.pending_portal:
                npc.portal_wait = world.portals[npc.pending_portal].traversal_ticks
            else:
                npc.action = npc.after_action

    # robot goto -----------------------------------------------------------------

    def _danger_at(self, pos: Vec3) -> tuple[str, object] | None:
        return detect_collision(self.world, pos)

    def _collide(self, kind: str):
        self.world.robot.collision_count += 1
        self._event({"e": "collision", "with": kind})
        self._terminate(PHASE_FAILED, FAIL_COLLISION)

    def _goto_tick(self, active: _ActiveCommand):
        robot = self.world.robot
        if active.portal_ticks > 0:
            active.portal_ticks -= 1
            if active.portal_ticks == 0 and active.pending_portal:
                portal = self.world.portals[active.pending_portal]
                other = portal.other_end(robot.floor)
                robot.floor = other[0]
                robot.pos = self.world.grids[other[0]].center(other[1], other[2])
                active.pending_portal = None
                self._finish_nav(active, rb.ARRIVED)
            return
        if not active.waypoints:
            self._arrive_goto(active)
            return
        # Advance up to one tick of travel along the waypoint polyline.
        remaining = float(self.world.robot_config.get("speed", 1.0)) * self.world.tick_dt
        pos = robot.pos
        wp_index = 0
        waypoints = active.waypoints
        while remaining > 1e-9 and wp_index < len(waypoints):
            nxt = waypoints[wp_index]
            seg = horizontal_distance(pos, nxt)
            if seg <= remaining:
                pos = nxt
                wp_index += 1
                remaining -= seg
            else:
                f = remaining / seg
                pos = Vec3(pos.x + (nxt.x - pos.x) * f, pos.y, pos.z + (nxt.z - pos.z) * f)
                remaining = 0.0
        danger = self._danger_at(pos)
        if danger is not None:
            kind, detail = danger
            if kind == "wall":
                # Only a deliberate wall-entry final step reaches here.
                robot.pos = pos
                self._collide("wall")
                return
            npc = self.world.npcs[detail]
            if active.waypoints and distance3d(active.waypoints[-1], npc.pos) < NPC_PLAN_CLEAR_M:
                # The commanded goal demands this proximity: dangerous.
                robot.pos = pos
                self._collide("npc")
                return
            active.wait_ticks += 1
            if active.wait_ticks > WAIT_TICKS_BEFORE_REPLAN:
                active.wait_ticks = 0
                active.replans += 1
                if active.replans > MAX_REPLANS:
                    self._finish_nav(active, rb.BLOCKED)
                    return
                path_cells, wall_entry = self._goto_path(active)
                if path_cells is None:
                    self._finish_nav(active, rb.BLOCKED)
                    return
                self._set_goto_waypoints(active, path_cells, wall_entry)
            return
        if horizontal_distance(pos, robot.pos) > 1e-9:
            robot.heading = bearing_to(robot.pos, pos)
        robot.pos = pos
        del active.waypoints[:wp_index]
        if not active.waypoints:
            self._arrive_goto(active)

    def _arrive_goto(self, active: _ActiveCommand):
        robot = self.world.robot
        grid = self.world.grids[robot.floor]
        active.arrived_distance = horizontal_distance(robot.pos, active.goal)
        cell = grid.cell_of(robot.pos)
        portal_id = grid.portal_at.get(cell)
        if portal_id is not None and self.world.portals[portal_id].kind == PORTAL_KIND_STAIRS:
            # Walking onto a stairs cell carries the robot to the paired floor.
            active.pending_portal = portal_id
            active.portal_ticks = self.world.portals[portal_id].traversal_ticks
            return
        self._finish_nav(active, rb.ARRIVED)

    # robot elevator ride ---------------------------------------------------------

    def _elevator_command_tick(self, active: _ActiveCommand):
        ev = self.world.elevator
        robot = self.world.robot
        if active.phase == "call":
            if robot.floor not in ev.pending_calls:
                ev.pending_calls.append(robot.floor)
            active.phase = "wait"
            return
        if active.phase == "wait":
            if ev.current_floor == robot.floor and ev.door_open and ev.occupancy == "empty":
                active.phase = "board"
                return
            active.elevator_waited += 1
            if active.elevator_waited > ELEVATOR_WAIT_CAP:
                active.arrived_distance = horizontal_distance(robot.pos, active.goal)
                self._finish_nav(active, rb.TIMEOUT)
            return
        if active.phase == "board":
            if not (ev.current_floor == robot.floor and ev.door_open and ev.occupancy == "empty"):
                active.phase = "wait"  # the car left; wait again
                return
            robot.pos = self.world.grids[robot.floor].center(*ev.car_cells[robot.floor])
            ev.occupancy = "robot"
            ev.occupant_target = active.target_floor
            active.phase = "ride"
            return
        if active.phase == "ride":
            if ev.current_floor == active.target_floor and ev.door_open:
                active.phase = "exit"
            return
        if active.phase == "exit":
            door = ev.door_cells[active.target_floor]
            robot.pos = self.world.grids[active.target_floor].center(*door)
            robot.floor = active.target_floor
            ev.occupancy = "empty"
            ev.occupant_target = None
            active.arrived_distance = 0.0
            self._finish_nav(active, rb.ARRIVED)

    # interactions -------------------------------------------------------------

    def _interaction_tick(self, active: _ActiveCommand):
        active.ticks_left -= 1
        if active.ticks_left > 0:
            return
        result = active.staged_result
        delivered = False
        if active.staged_apply is not None:
            action = active.staged_apply
            if action[0] == "grasp":
                item = self.world.items[action[1]]
                item.holder = "robot"
                self.world.robot.held_item = item.name
                self._sync_held_item()
                self._event({"e": "grasp", "item": item.name, "status": result.status})
            else:
                _, item_name, point, holder = action
                item = self.world.items[item_name]
                item.holder = holder
                item.pos = point
                self.world.robot.held_item = None
                npc = self.world.npcs[self.target_npc_id]
                self._event({"e": "place", "item": item_name, "status": result.status,
                             "holder": holder, "pos": point.as_list(),
                             "npc_dist": distance3d(point, npc.pos)})
                delivered = (item_name == self.target_object
                             and distance3d(point, npc.pos) <= 3.0)
        else:
            self._event({"e": active.cmd.manipulation, "item": None, "status": result.status})
        self._note_result(CommandResultEnvelope(active.cmd_id, "interact", result))
        if self.active is active:
            self.active = None
        if delivered:
            self._terminate(PHASE_SUCCEEDED, None)

    def _sync_held_item(self):
        """A held item rides at gripper height wherever the robot goes."""
        held = self.world.robot.held_item
        if held is not None:
            item = self.world.items[held]
            r = self.world.robot.pos
            item.pos = Vec3(r.x, r.y + 0.6, r.z)


# ---------------------------------------------------------------------------


def reset_episode(world_source, task: dict, seed: int, trace=None,
                  free_mode: bool = False) -> Episode:
    """Fresh episode with the task's initial conditions applied.

    ``world_source`` is anything :func:`deliverysim.world.load_world` accepts.
    The clock is set to the task time, the target character is posed exactly
    as recorded, the target object is moved to its recorded position, and the
    remaining characters follow their schedules.
    """
    world = load_world(world_source.config if isinstance(world_source, WorldState) else world_source)
    npc_id = task.get("npc_id")
    if npc_id not in world.npcs:
        raise EpisodeSetupError(f"task names unknown npc_id {npc_id}")
    profile = world.npcs[npc_id].profile
    if task.get("npc_name") != profile.name:
        raise EpisodeSetupError(
            f"task npc_name {task.get('npc_name')!r} does not match npc {npc_id} ({profile.name})")
    obj_name = task.get("target_object_name")
    if obj_name not in world.items:
        raise EpisodeSetupError(f"task names unknown object {obj_name!r}")
    item = world.items[obj_name]
    if task.get("target_object_type") != item.type_id:
        raise EpisodeSetupError(
            f"object {obj_name} has type {item.type_id}, task says {task.get('target_object_type')!r}")
    if task.get("npc_action") not in ("sit", "stand", "work", "rest", "eat"):
        raise EpisodeSetupError(f"unsupported npc_action {task.get('npc_action')!r}")
    try:
        start = datetime.fromisoformat(task["time"])
    except (KeyError, ValueError) as exc:
        raise EpisodeSetupError(f"bad task time: {exc}") from exc

    world.clock.start = start
    world.clock.tick_index = 0

    placement = scheduled_npc_placement(world, world.clock.time_of_day_s)
    for nid, (pos, floor, action, _room) in placement.items():
        npc = world.npcs[nid]
        npc.pos = pos
        npc.floor = floor
        npc.action = action
        npc.waypoints = []
        npc.pending_portal = None
        hit = npc.profile.entry_at(world.clock.time_of_day_s)
        npc.entry_idx = hit[0] if hit else -1

    target = world.npcs[npc_id]
    tp = task["npc_position"]
    target.pos = Vec3(float(tp["x"]), float(tp["y"]), float(tp["z"]))
    target.floor = world.floor_of(target.pos)
    target.action = task["npc_action"]

    op = task["target_object_pos"]
    item.pos = Vec3(float(op["x"]), float(op["y"]), float(op["z"]))
    rec = world.receptacle_under(item.pos)
    item.holder = rec.receptacle_id if rec is not None else "world"

    episode = Episode(world, task, seed, trace=trace, free_mode=free_mode)
    return episode
