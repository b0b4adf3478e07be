"""Drive one delivery by hand with the robot skill API.

The episode is the suite's reference task: at 12:45 Imani sits in the kitchen
and wants the blue water bottle from the dining table, 3.38 m away from her.

Run:  python3 demos/02_episode_walkthrough.py
"""

import math

from deliverysim import (Vec3, distance3d, goto_target_goal, object_interaction,
                         observe, reset_episode, rotate_head)
from deliverysim.geometry import bearing_to, wrap_angle

TASK = {
    "task_id": "demo_delivery",
    "npc_name": "Imani",
    "npc_id": 1,
    "time": "2025-02-11T12:45:49",
    "npc_action": "sit",
    "npc_position": {"x": -16.02390480041504, "y": 0.0, "z": -8.445791244506836},
    "target_object_name": "WaterBottle_Blue_1",
    "target_object_type": "WaterBottleBlue",
    "target_object_pos": {"x": -16.878999710083008, "y": 0.7600002288818359,
                          "z": -5.263000011444092},
    "directive": [
        "Grasp the blue water bottle from the wooden dining table in the kitchen "
        "and bring it to me in the kitchen room.",
        "Fetch the blue-packaged water bottle from the wooden dining table in the "
        "kitchen and deliver it to Imani, the woman in the blue shirt with black "
        "glasses, in the kitchen room."],
    "npc_description": (
        "I'm Imani, a scientific advisor at a polar research station. My room "
        "number is 1, and my office is located in office 1. I often lead a regular "
        "life. My fashion preferences include blue shirts and black glasses."),
}

episode = reset_episode(None, TASK, seed=7)
world = episode.world
print("directive:", TASK["directive"][0])
print(f"clock {world.clock.iso()}, budget {episode.budget} ticks "
      f"({episode.budget * world.tick_dt / 60:.0f} simulated minutes)\n")

# 1. walk to a spot beside the dining table
nav = goto_target_goal(episode, Vec3(-17.625, 0.0, -5.375), radius=0.1)
print(f"goto table side  -> {nav.status}, {world.clock.tick_index} ticks elapsed")

# 2. aim the head camera at the bottle and find its entity ref
bottle = world.items["WaterBottle_Blue_1"]
yaw = wrap_angle(bearing_to(world.robot.pos, bottle.pos) - world.robot.heading)
obs = rotate_head(episode, yaw)
seen = obs.find("WaterBottle_Blue_1")
print(f"rotate_head({yaw:+.2f}) -> {len(obs.entities)} entities in view, "
      f"bottle at {seen.distance:.2f} m, bearing {seen.bearing:+.2f} rad")

# 3. grasp through the 1.2 m gate
grab = object_interaction(episode, seen.entity_ref, "grasp")
print(f"grasp            -> {grab.status} (holding {world.robot.held_item})")

# 4. approach Imani and set the bottle down within the 3 m success radius
imani = world.npcs[1]
nav = goto_target_goal(episode, Vec3(imani.pos.x + 1.0, 0.0, imani.pos.z + 0.5),
                       radius=0.4)
print(f"goto recipient   -> {nav.status}, now {distance3d(world.robot.pos, imani.pos):.2f} m "
      f"from {imani.profile.name}")
drop = world.robot.pos
place = object_interaction(episode, None, "place", floor_pos=(drop.x, drop.z))
print(f"place            -> {place.status}")

print(f"\nepisode phase: {episode.phase} after {world.clock.tick_index} ticks "
      f"({world.clock.tick_index * world.tick_dt:.0f} simulated seconds)")
print(f"bottle now {distance3d(bottle.pos, imani.pos):.2f} m from "
      f"{imani.profile.name} -> delivery counts")
