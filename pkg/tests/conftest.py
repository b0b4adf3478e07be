import json

import pytest

from deliverysim.world import load_world

# The anchor fixture used across the suite: a delivery task in the bundled
# world whose every coordinate is load-bearing (kitchen geometry, the 3.38 m
# character/object separation, the schedule entry at 12:45).
REFERENCE_TASK = {
    "task_id": "1_2025_02_11T12_45_49_10_1_1",
    "npc_name": "Imani",
    "npc_id": 1,
    "time": "2025-02-11T12:45:49",
    "npc_action": "sit",
    "npc_position": {
        "x": -16.02390480041504,
        "y": 0.0,
        "z": -8.445791244506836},
    "target_object_name": "WaterBottle_Blue_1",
    "target_object_type": "WaterBottleBlue",
    "target_object_pos": {
        "x": -16.878999710083008,
        "y": 0.7600002288818359,
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


@pytest.fixture()
def reference_task():
    return json.loads(json.dumps(REFERENCE_TASK))


@pytest.fixture(scope="session")
def world():
    return load_world(None)


@pytest.fixture(scope="session")
def reach(world):
    from deliverysim.engine import reachable_cells

    return reachable_cells(world)
