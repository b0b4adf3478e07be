import math
import random

import pytest

from deliverysim import robot as rb
from deliverysim.engine import CommandInFlightError, reset_episode
from deliverysim.geometry import Vec3, bearing_to, distance3d, wrap_angle
from deliverysim.pathfind import bfs_costs
from deliverysim.world import FREE


def quiet_episode(reference_task, time="2025-02-11T03:10:00"):
    """An episode at night: every character is off-schedule in their first
    room (floor 2), leaving floors 0-1 free of clearance constraints."""
    task = dict(reference_task, time=time, npc_action="rest")
    task["npc_position"] = {"x": -30.125, "y": 6.0, "z": -10.125}
    return reset_episode(None, task, 7)


# -- goto_target_goal ---------------------------------------------------------


def test_goto_own_position_arrives_in_zero_ticks(reference_task):
    ep = reset_episode(None, reference_task, 7)
    before = ep.world.clock.tick_index
    result = rb.goto_target_goal(ep, Vec3(0.0, 0.0, 0.0), 1.7)
    assert result.status == "arrived"
    assert result.distance_to_goal <= 1.7
    assert ep.world.clock.tick_index == before


def test_goto_respects_radius(reference_task):
    ep = reset_episode(None, reference_task, 7)
    goal = Vec3(-5.0, 0.0, 0.5)
    result = rb.goto_target_goal(ep, goal, 0.5)
    assert result.status == "arrived"
    assert result.distance_to_goal <= 0.5


def test_goto_walled_off_interior_is_blocked(reference_task):
    ep = reset_episode(None, reference_task, 7)
    # The elevator shaft interior is free but sealed off the walk graph.
    grid = ep.world.grids[0]
    car = ep.world.elevator.car_cells[0]
    result = rb.goto_target_goal(ep, grid.center(*car), 0.1)
    assert result.status == "blocked"


def test_goto_cross_floor_goal_is_an_error(reference_task):
    ep = reset_episode(None, reference_task, 7)
    result = ep.run_command(rb.GotoTargetGoal(Vec3(0.0, 3.0, 0.0), 1.0))
    assert isinstance(result, dict)
    assert "cross_floor_goal" in result["error"]


def test_goto_path_length_optimal_against_bfs(reference_task):
    # With no characters on the floor, walked distance must equal the BFS
    # optimum on the same grid (the 1.05x acceptance bound with margin 1.0).
    ep = quiet_episode(reference_task)
    ep.budget = 10 ** 9  # many legs in one episode; the budget is not under test
    grid = ep.world.grids[0]
    blocked = grid.walk_blocked()
    rng = random.Random(7)
    free = [(cx, cz) for cx in range(grid.width) for cz in range(grid.height)
            if not blocked[cx, cz]]
    start_costs = bfs_costs(blocked, grid.cell_of(ep.world.robot.pos))
    checked = 0
    for _ in range(60):
        goal_cell = free[rng.randrange(len(free))]
        if start_costs[goal_cell] <= 4:
            continue
        start_cell = grid.cell_of(ep.world.robot.pos)
        optimal = bfs_costs(blocked, start_cell)[goal_cell]
        if optimal < 0:
            continue
        before = ep.world.clock.tick_index
        result = rb.goto_target_goal(ep, grid.center(*goal_cell), 0.05)
        assert result.status == "arrived"
        ticks = ep.world.clock.tick_index - before
        walked_m = ticks * ep.world.tick_dt * 1.0  # 1.0 m/s
        optimal_m = optimal * grid.cell_size
        assert walked_m <= optimal_m * 1.05 + 0.3
        checked += 1
    assert checked >= 30


def test_second_command_while_one_runs_is_rejected(reference_task):
    ep = reset_episode(None, reference_task, 7)
    ep.issue(rb.GotoTargetGoal(Vec3(-5.0, 0.0, 0.0), 0.5))
    with pytest.raises(CommandInFlightError):
        ep.issue(rb.Observe())


# -- stairs and elevator --------------------------------------------------------


def test_walking_onto_stairs_cell_changes_floor(reference_task):
    ep = quiet_episode(reference_task)
    assert ep.world.robot.floor == 0
    grid = ep.world.grids[0]
    portal = ep.world.portals["stairs-0-1"]
    result = rb.goto_target_goal(ep, grid.center(portal.a[1], portal.a[2]), 0.1)
    assert result.status == "arrived"
    assert ep.world.robot.floor == 1
    cell = ep.world.grids[1].cell_of(ep.world.robot.pos)
    assert cell == (portal.b[1], portal.b[2])


def test_request_elevator_rides_to_target_floor(reference_task):
    ep = quiet_episode(reference_task)
    grid = ep.world.grids[0]
    door = ep.world.elevator.door_cells[0]
    rb.goto_target_goal(ep, grid.center(*door), 0.8)
    before = ep.world.clock.tick_index
    result = rb.request_elevator(ep, 2)
    assert result.status == "arrived"
    assert ep.world.robot.floor == 2
    assert ep.world.grids[2].cell_of(ep.world.robot.pos) == tuple(ep.world.elevator.door_cells[2])
    # Ride time is fully determined by the car constants: call(1) + open(30)
    # + board(1) + close-and-go(1) + transit(100) + exit window.
    ticks = ep.world.clock.tick_index - before
    timing = ep.world.elevator_timing
    transit = 2 * timing["transit_ticks_per_floor"]
    assert transit + 4 <= ticks <= transit + timing["door_ticks"] + 10


def test_request_elevator_far_from_door_is_an_error(reference_task):
    ep = reset_episode(None, reference_task, 7)
    result = ep.run_command(rb.RequestElevator(2))
    assert isinstance(result, dict)
    assert "elevator door" in result["error"]


def test_request_elevator_occupied_by_character_times_out(reference_task):
    ep = quiet_episode(reference_task)
    grid = ep.world.grids[0]
    door = ep.world.elevator.door_cells[0]
    rb.goto_target_goal(ep, grid.center(*door), 0.8)
    ep.world.elevator.occupancy = "npc:3"
    before = ep.world.clock.tick_index
    result = rb.request_elevator(ep, 2)
    assert result.status == "timeout"
    assert ep.world.clock.tick_index - before >= 200
    assert ep.world.robot.floor == 0


# -- observation ---------------------------------------------------------------


def _observation_oracle(world, camera="head"):
    """Brute-force visibility predicate, independent of build_observation."""
    robot = world.robot
    axis = robot.heading + (robot.head_yaw if camera == "head" else 0.0)
    expected = set()
    for name, item in world.items.items():
        if item.holder == "robot" or world.item_enclosed(item):
            continue
        if world.floor_of(item.pos) != robot.floor:
            continue
        d = distance3d(robot.pos, item.pos)
        rel = wrap_angle(bearing_to(robot.pos, item.pos) - axis)
        if d <= 10.0 and abs(rel) <= math.pi / 4 + 1e-9 and (
                d < 1e-9 or world.line_of_sight(robot.pos, item.pos)):
            expected.add(("item", name))
    for npc in world.npcs_sorted():
        if npc.floor != robot.floor:
            continue
        d = distance3d(robot.pos, npc.pos)
        rel = wrap_angle(bearing_to(robot.pos, npc.pos) - axis)
        if d <= 10.0 and abs(rel) <= math.pi / 4 + 1e-9 and (
                d < 1e-9 or world.line_of_sight(robot.pos, npc.pos)):
            expected.add(("npc", npc.profile.name))
    return expected


def _stand_at_grasp_spot(ep):
    grid = ep.world.grids[0]
    rb.goto_target_goal(ep, grid.center(73, 34), 0.05)


def test_observe_sees_the_bottle(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    obs = rb.rotate_head(ep, wrap_angle(bearing_to(ep.world.robot.pos, bottle)
                                        - ep.world.robot.heading))
    seen = obs.find("WaterBottle_Blue_1")
    assert seen is not None
    assert seen.distance == pytest.approx(distance3d(ep.world.robot.pos, bottle))
    assert seen.distance < 1.2
    assert obs.room_label == "kitchen"


def test_observe_occluded_item_absent(reference_task):
    ep = reset_episode(None, reference_task, 7)
    # From the corridor, the bottle is behind the kitchen wall.
    rb.goto_target_goal(ep, Vec3(-16.9, 0.0, -3.0), 0.2)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    yaw = wrap_angle(bearing_to(ep.world.robot.pos, bottle) - ep.world.robot.heading)
    if abs(yaw) > math.pi:
        yaw = 0.0
    obs = rb.rotate_head(ep, yaw)
    assert not ep.world.line_of_sight(ep.world.robot.pos, bottle)
    assert obs.find("WaterBottle_Blue_1") is None


def test_observation_distances_match_distance3d(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    obs = rb.observe(ep)
    for ent in obs.entities:
        assert ent.distance == pytest.approx(distance3d(ep.world.robot.pos, ent.pos))


def test_observation_matches_brute_oracle_over_random_poses(reference_task):
    ep = reset_episode(None, reference_task, 7)
    world = ep.world
    rng = random.Random(11)
    grid = world.grids[0]
    free = [(cx, cz) for cx in range(grid.width) for cz in range(grid.height)
            if grid.cells[cx, cz] == FREE]
    for _ in range(100):
        world.robot.pos = grid.center(*free[rng.randrange(len(free))])
        world.robot.heading = rng.uniform(-math.pi, math.pi)
        world.robot.head_yaw = rng.uniform(-math.pi, math.pi)
        obs = rb.build_observation(world, "head", 1)
        got = {(e.kind, e.name) for e in obs.entities if e.kind != "receptacle"}
        assert got == _observation_oracle(world)


def test_rotate_head_zero_equals_observe(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    obs_a = rb.observe(ep)
    obs_b = rb.rotate_head(ep, 0.0)
    assert [e.name for e in obs_a.entities] == [e.name for e in obs_b.entities]


def test_rotate_head_out_of_range(reference_task):
    ep = reset_episode(None, reference_task, 7)
    result = ep.run_command(rb.RotateHead(3.5))
    assert isinstance(result, dict) and "yaw" in result["error"]


def test_object_behind_becomes_visible_after_half_turn(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    toward = wrap_angle(bearing_to(ep.world.robot.pos, bottle) - ep.world.robot.heading)
    away = wrap_angle(toward + math.pi)
    assert rb.rotate_head(ep, away).find("WaterBottle_Blue_1") is None
    assert rb.rotate_head(ep, toward).find("WaterBottle_Blue_1") is not None


def test_four_step_sweep_superset_of_any_frame(reference_task):
    ep = reset_episode(None, reference_task, 7)
    world = ep.world
    rng = random.Random(23)
    grid = world.grids[0]
    free = [(cx, cz) for cx in range(grid.width) for cz in range(grid.height)
            if grid.cells[cx, cz] == FREE]
    for _ in range(25):
        world.robot.pos = grid.center(*free[rng.randrange(len(free))])
        world.robot.heading = rng.uniform(-math.pi, math.pi)
        sweep = set()
        for yaw in (0.0, math.pi / 2, math.pi, -math.pi / 2):
            world.robot.head_yaw = yaw
            sweep |= {e.name for e in rb.build_observation(world, "head", 1).entities}
        world.robot.head_yaw = rng.uniform(-math.pi, math.pi)
        single = {e.name for e in rb.build_observation(world, "head", 1).entities}
        assert single <= sweep


# -- object interaction -----------------------------------------------------------


def grasp_bottle(ep):
    _stand_at_grasp_spot(ep)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    obs = rb.rotate_head(ep, wrap_angle(bearing_to(ep.world.robot.pos, bottle)
                                        - ep.world.robot.heading))
    seen = obs.find("WaterBottle_Blue_1")
    assert seen is not None
    return rb.object_interaction(ep, seen.entity_ref, rb.GRASP)


def test_grasp_within_gate_succeeds(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    obs = rb.rotate_head(ep, wrap_angle(bearing_to(ep.world.robot.pos, bottle)
                                        - ep.world.robot.heading))
    seen = obs.find("WaterBottle_Blue_1")
    assert seen is not None
    before = ep.world.clock.tick_index
    result = rb.object_interaction(ep, seen.entity_ref, rb.GRASP)
    assert result.status == "grasped"
    assert ep.world.robot.held_item == "WaterBottle_Blue_1"
    assert ep.world.items["WaterBottle_Blue_1"].holder == "robot"
    assert ep.world.clock.tick_index - before == 20


def test_grasp_beyond_gate_is_out_of_range(reference_task):
    ep = reset_episode(None, reference_task, 7)
    grid = ep.world.grids[0]
    rb.goto_target_goal(ep, grid.center(72, 30), 0.05)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    assert distance3d(ep.world.robot.pos, bottle) > 1.2
    obs = rb.rotate_head(ep, wrap_angle(bearing_to(ep.world.robot.pos, bottle)
                                        - ep.world.robot.heading))
    seen = obs.find("WaterBottle_Blue_1")
    assert seen is not None
    result = rb.object_interaction(ep, seen.entity_ref, rb.GRASP)
    assert result.status == "out_of_range"


def test_grasp_receptacle_is_wrong_target(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    table = None
    for yaw in (0.0, math.pi / 2, math.pi, -math.pi / 2):
        obs = rb.rotate_head(ep, yaw)
        table = next((e for e in obs.entities if e.kind == "receptacle"), None)
        if table is not None:
            break
    assert table is not None
    result = rb.object_interaction(ep, table.entity_ref, rb.GRASP)
    assert result.status == "wrong_target"


def test_grasp_with_hands_full(reference_task):
    ep = reset_episode(None, reference_task, 7)
    assert grasp_bottle(ep).status == "grasped"
    bottle2 = ep.world.items["Apple_Red_1"]
    ep.world.robot.pos = Vec3(bottle2.pos.x + 0.5, 0.0, bottle2.pos.z + 0.5)
    obs = rb.rotate_head(ep, wrap_angle(bearing_to(ep.world.robot.pos, bottle2.pos)
                                        - ep.world.robot.heading))
    seen = obs.find("Apple_Red_1")
    if seen is not None:
        assert rb.object_interaction(ep, seen.entity_ref, rb.GRASP).status == "hands_full"


def test_place_on_floor_and_empty_hand(reference_task):
    ep = reset_episode(None, reference_task, 7)
    grasp_bottle(ep)
    drop = ep.world.robot.pos
    result = rb.object_interaction(ep, None, rb.PLACE, floor_pos=(drop.x, drop.z))
    assert result.status == "placed"
    item = ep.world.items["WaterBottle_Blue_1"]
    assert item.holder == "world"
    assert item.pos.y == pytest.approx(0.0)
    again = rb.object_interaction(ep, None, rb.PLACE, floor_pos=(drop.x, drop.z))
    assert again.status == "empty_hand"


def test_place_back_on_receptacle(reference_task):
    ep = reset_episode(None, reference_task, 7)
    grasp_bottle(ep)
    obs = rb.observe(ep)
    table = next(e for e in obs.entities
                 if e.kind == "receptacle" and e.type == "kitchen.dining_table")
    result = rb.object_interaction(ep, table.entity_ref, rb.PLACE)
    assert result.status == "placed"
    item = ep.world.items["WaterBottle_Blue_1"]
    assert item.holder == "kitchen.dining_table"
    assert item.pos.y == pytest.approx(0.76)


def test_stale_entity_ref_is_rejected(reference_task):
    ep = reset_episode(None, reference_task, 7)
    _stand_at_grasp_spot(ep)
    bottle = ep.world.items["WaterBottle_Blue_1"].pos
    obs = rb.rotate_head(ep, wrap_angle(bearing_to(ep.world.robot.pos, bottle)
                                        - ep.world.robot.heading))
    seen = obs.find("WaterBottle_Blue_1")
    rb.observe(ep, rb.CAMERA_ARM)  # invalidates previous refs
    result = rb.object_interaction(ep, seen.entity_ref, rb.GRASP)
    assert result.status == "wrong_target"


def test_held_item_rides_with_robot(reference_task):
    ep = reset_episode(None, reference_task, 7)
    grasp_bottle(ep)
    rb.goto_target_goal(ep, Vec3(-14.0, 0.0, -9.0), 0.4)
    item = ep.world.items["WaterBottle_Blue_1"]
    assert distance3d(item.pos, ep.world.robot.pos) < 0.7


# -- scenario assets ---------------------------------------------------------------


def test_assets_shape_and_coverage(world):
    assets = rb.get_scenario_assets(world)
    assert len(assets["obstacle_maps"]) == 3
    assert len(assets["customer_descriptions"]) == 10
    assert len(assets["panorama_samples"]) >= 23
    rooms_covered = {p["room"] for p in assets["panorama_samples"]}
    assert rooms_covered == {r.name for r in world.rooms.values()}
    for sample in assets["panorama_samples"]:
        assert sample["text"].startswith(sample["room"])


def test_assets_task_independent(world):
    a = rb.get_scenario_assets(world)
    b = rb.get_scenario_assets(world)
    assert a == b


def test_assets_obstacle_rows_match_projection(world):
    assets = rb.get_scenario_assets(world)
    occ = world.project_obstacle_map(0)
    rows = assets["obstacle_maps"][0]["rows"]
    assert len(rows) == world.grids[0].height
    for cz, row in enumerate(rows):
        for cx, ch in enumerate(row):
            assert int(ch) == occ[cx, cz]
