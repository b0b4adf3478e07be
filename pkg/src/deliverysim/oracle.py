"""Scripted full-knowledge solver: emits a replayable command list per task.

The oracle plans against its own private episode rollout, so the emitted
script already accounts for character movement, elevator timing, and stairs
traversal; replaying the script on a fresh episode with the same seed
reproduces the rollout exactly.  It is the solvability witness for the
benchmark: every shipped task must be solvable by this script within the
episode budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import robot as rb
from .engine import (Episode, find_delivery_cell, find_grasp_cell,
                     reachable_cells, reset_episode)
from .geometry import Vec3, bearing_to, distance3d, wrap_angle
from .world import PORTAL_KIND_STAIRS


class OracleError(RuntimeError):
    """The oracle could not solve a task it was given."""


@dataclass
class OracleRun:
    commands: list[dict]
    succeeded: bool
    ticks: int
    phase: str
    reason: str | None


def _run(episode: Episode, script: list[dict], cmd: rb.Command):
    script.append(rb.command_to_wire(cmd))
    return episode.run_command(cmd)


def _goto_cell(episode: Episode, script: list[dict], cell: tuple[int, int],
               radius: float = 0.1):
    grid = episode.world.grids[episode.world.robot.floor]
    goal = grid.center(*cell)
    result = _run(episode, script, rb.GotoTargetGoal(goal, radius))
    if not isinstance(result, rb.NavResult) or result.status != rb.ARRIVED:
        raise OracleError(f"goto {cell} failed: {result}")
    return result


def _change_floor(episode: Episode, script: list[dict], target_floor: int):
    world = episode.world
    robot = world.robot
    delta = target_floor - robot.floor
    if delta == 0:
        return
    if abs(delta) >= 2:
        door = world.elevator.door_cells[robot.floor]
        grid = world.grids[robot.floor]
        # Stand beside the door (its cell itself is a portal cell).
        result = _run(episode, script,
                      rb.GotoTargetGoal(grid.center(*door), 0.8))
        if not isinstance(result, rb.NavResult) or result.status != rb.ARRIVED:
            raise OracleError(f"could not reach the elevator door: {result}")
        result = _run(episode, script, rb.RequestElevator(target_floor))
        if not isinstance(result, rb.NavResult) or result.status != rb.ARRIVED:
            raise OracleError(f"elevator ride failed: {result}")
        return
    # One floor: take the stairs; stepping onto the portal cell traverses.
    step = 1 if delta > 0 else -1
    while robot.floor != target_floor:
        portal = next(
            (p for p in sorted(world.portals.values(), key=lambda p: p.portal_id)
             if p.kind == PORTAL_KIND_STAIRS
             and {p.a[0], p.b[0]} == {robot.floor, robot.floor + step}),
            None)
        if portal is None:
            raise OracleError(f"no stairs between floors {robot.floor} and {robot.floor + step}")
        end = portal.a if portal.a[0] == robot.floor else portal.b
        _goto_cell(episode, script, (end[1], end[2]), radius=0.1)


def _look_at(episode: Episode, script: list[dict], target: Vec3) -> rb.Observation:
    robot = episode.world.robot
    yaw = wrap_angle(bearing_to(robot.pos, target) - robot.heading)
    result = _run(episode, script, rb.RotateHead(yaw))
    if not isinstance(result, rb.Observation):
        raise OracleError(f"rotate_head failed: {result}")
    return result


def solve(world_source, task: dict, seed: int, reach=None) -> OracleRun:
    """Plan and verify a command script that delivers the task's object.

    ``reach`` may carry precomputed reachability masks (static geometry only)
    to amortize the flood fill across many solves on the same world.
    """
    episode = reset_episode(world_source, task, seed)
    world = episode.world
    script: list[dict] = []
    if reach is None:
        reach = reachable_cells(world)

    target_item = world.items[task["target_object_name"]]
    npc = world.npcs[task["npc_id"]]

    # Fetch leg: reach the object's floor, stand at a grasp cell, grab it.
    obj_floor = world.floor_of(target_item.pos)
    _change_floor(episode, script, obj_floor)
    npc_positions = [n.pos for n in world.npcs_sorted()]
    cell = find_grasp_cell(world, target_item.pos, reach, npc_positions)
    if cell is None:
        raise OracleError(f"no grasp cell for {target_item.name}")
    _goto_cell(episode, script, cell, radius=0.1)
    obs = _look_at(episode, script, target_item.pos)
    seen = obs.find(target_item.name)
    if seen is None:
        raise OracleError(f"{target_item.name} not visible from the grasp cell")
    result = _run(episode, script,
                  rb.ObjectInteraction(manipulation=rb.GRASP, target_ref=seen.entity_ref))
    if not isinstance(result, rb.InteractResult) or result.status != rb.GRASPED:
        raise OracleError(f"grasp failed: {result}")

    # Delivery leg: chase the character (they may be walking), then drop the
    # item at the robot's own cell once inside the 3 m success radius.
    for _attempt in range(10):
        _change_floor(episode, script, npc.floor)
        positions = [n.pos for n in world.npcs_sorted()]
        cell = find_delivery_cell(world, npc.pos, reach, positions, max_range=2.2)
        if cell is None:
            cell = find_delivery_cell(world, npc.pos, reach, None, max_range=2.6)
        if cell is None:
            raise OracleError("no delivery cell near the character")
        _goto_cell(episode, script, cell, radius=0.1)
        if (world.robot.floor == npc.floor
                and distance3d(world.robot.pos, npc.pos) <= 2.7):
            break
    else:
        raise OracleError("could not catch up with the character")

    robot = world.robot
    grid = world.grids[robot.floor]
    drop = grid.center(*grid.cell_of(robot.pos))
    result = _run(episode, script, rb.ObjectInteraction(
        manipulation=rb.PLACE, floor_pos=(drop.x, drop.z)))
    if not isinstance(result, rb.InteractResult) or result.status != rb.PLACED:
        raise OracleError(f"place failed: {result}")
    if episode.phase != "succeeded":
        raise OracleError(
            f"script finished without success: {episode.phase} ({episode.fail_reason})")
    return OracleRun(
        commands=script,
        succeeded=True,
        ticks=world.clock.tick_index,
        phase=episode.phase,
        reason=episode.fail_reason,
    )


def replay_script(world_source, task: dict, seed: int, commands: list[dict],
                  trace=None) -> Episode:
    """Execute a pre-generated command list on a fresh episode."""
    episode = reset_episode(world_source, task, seed, trace=trace)
    for wire in commands:
        if not episode.running:
            break
        episode.run_command(rb.command_from_wire(wire))
    return episode
