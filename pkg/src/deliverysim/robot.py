"""Robot skill surface: command types, semantic observations, static assets.

The robot senses the world through a semantic camera: instead of pixels it
receives the list of entities (items, receptacles, characters) that are
within range, inside the camera's field of view, and not hidden behind a
wall or inside a closed container.  Grasping is gated on a 1.2 m reach with
line of sight.  Commands defined here are executed by the engine's tick loop;
the module-level functions are blocking conveniences that run a command on an
episode until its result arrives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Vec3, bearing_to, distance3d, wrap_angle
from .world import WorldState

CAMERA_HEAD = "head"
CAMERA_ARM = "arm"

GRASP = "grasp"
PLACE = "place"

# NavResult / InteractResult statuses
ARRIVED = "arrived"
BLOCKED = "blocked"
TIMEOUT = "timeout"
GRASPED = "grasped"
PLACED = "placed"
OUT_OF_RANGE = "out_of_range"
NO_LINE_OF_SIGHT = "no_line_of_sight"
WRONG_TARGET = "wrong_target"
HANDS_FULL = "hands_full"
EMPTY_HAND = "empty_hand"


@dataclass(frozen=True)
class GotoTargetGoal:
    goal: Vec3
    radius: float


@dataclass(frozen=True)
class RequestElevator:
    target_floor: int


@dataclass(frozen=True)
class Observe:
    camera: str = CAMERA_HEAD


@dataclass(frozen=True)
class RotateHead:
    yaw: float


@dataclass(frozen=True)
class ObjectInteraction:
    """Grasp an observed entity, or place the held item.

    ``target_ref`` must come from the latest observation.  For floor
    placement, ``floor_pos`` gives the drop point instead of a ref.
    """

    manipulation: str
    target_ref: str | None = None
    floor_pos: tuple[float, float] | None = None  # (x, z) on the robot's floor


Command = GotoTargetGoal | RequestElevator | Observe | RotateHead | ObjectInteraction


@dataclass(frozen=True)
class NavResult:
    status: str
    final_pos: Vec3
    distance_to_goal: float

    def to_wire(self) -> dict:
        return {"status": self.status, "final_pos": self.final_pos.as_list(),
                "distance_to_goal": self.distance_to_goal}


@dataclass(frozen=True)
class InteractResult:
    status: str
    item: str | None = None

    def to_wire(self) -> dict:
        return {"status": self.status, "item": self.item}


@dataclass(frozen=True)
class SeenEntity:
    entity_ref: str
    kind: str  # "item" | "receptacle" | "npc"
    name: str
    type: str
    descriptors: tuple[str, ...]
    pos: Vec3
    distance: float
    bearing: float

    def to_wire(self) -> dict:
        return {
            "entity_ref": self.entity_ref,
            "kind": self.kind,
            "name": self.name,
            "type": self.type,
            "descriptors": list(self.descriptors),
            "pos": self.pos.as_list(),
            "distance": self.distance,
            "bearing": self.bearing,
        }


@dataclass(frozen=True)
class Observation:
    obs_id: int
    camera: str
    head_yaw: float
    heading: float  # robot body yaw: proprioception, not scene metadata
    room_label: str | None
    entities: tuple[SeenEntity, ...] = field(default_factory=tuple)

    def find(self, name: str) -> SeenEntity | None:
        for e in self.entities:
            if e.name == name:
                return e
        return None

    def to_wire(self) -> dict:
        return {
            "obs_id": self.obs_id,
            "camera": self.camera,
            "head_yaw": self.head_yaw,
            "heading": self.heading,
            "room_label": self.room_label,
            "entities": [e.to_wire() for e in self.entities],
        }


def _visible(world: WorldState, origin: Vec3, axis: float, target: Vec3,
             view_range: float, half_fov: float) -> tuple[bool, float, float]:
    """Apply the range / field-of-view / line-of-sight predicate."""
    if world.floor_of(target) != world.floor_of(origin):
        return False, 0.0, 0.0
    dist = distance3d(origin, target)
    if dist > view_range:
        return False, dist, 0.0
    rel = wrap_angle(bearing_to(origin, target) - axis)
    if abs(rel) > half_fov + 1e-9:
        return False, dist, rel
    if dist > 1e-9 and not world.line_of_sight(origin, target):
        return False, dist, rel
    return True, dist, rel


def build_observation(world: WorldState, camera: str, obs_id: int) -> Observation:
    """Semantic camera frame for the robot's current pose."""
    robot = world.robot
    cfg = world.robot_config
    view_range = float(cfg.get("view_range", 10.0))
    half_fov = math.radians(float(cfg.get("fov_deg", 90.0))) / 2.0
    axis = robot.heading + (robot.head_yaw if camera == CAMERA_HEAD else 0.0)

    entities: list[SeenEntity] = []
    for name in sorted(world.items):
        item = world.items[name]
        if item.holder == "robot" or world.item_enclosed(item):
            continue
        ok, dist, rel = _visible(world, robot.pos, axis, item.pos, view_range, half_fov)
        if ok:
            entities.append(SeenEntity(
                entity_ref=f"{obs_id}:{name}", kind="item", name=name,
                type=item.type_id, descriptors=item.descriptors,
                pos=item.pos, distance=dist, bearing=rel))
    for rec_id in sorted(world.receptacles):
        rec = world.receptacles[rec_id]
        room = world.rooms[rec.room_id]
        if room.floor_index != robot.floor:
            continue
        x0, z0, x1, z1 = rec.rect
        grid = world.grids[room.floor_index]
        center = Vec3(
            grid.origin.x + (x0 + x1 + 1) / 2.0 * grid.cell_size,
            room.floor_index * world.floor_height + rec.surface_height,
            grid.origin.z + (z0 + z1 + 1) / 2.0 * grid.cell_size,
        )
        ok, dist, rel = _visible(world, robot.pos, axis, center, view_range, half_fov)
        if ok:
            entities.append(SeenEntity(
                entity_ref=f"{obs_id}:{rec_id}", kind="receptacle", name=rec.name,
                type=rec_id, descriptors=(rec.descriptor,) if rec.descriptor else (),
                pos=center, distance=dist, bearing=rel))
    for npc in world.npcs_sorted():
        ok, dist, rel = _visible(world, robot.pos, axis, npc.pos, view_range, half_fov)
        if ok:
            entities.append(SeenEntity(
                entity_ref=f"{obs_id}:npc:{npc.profile.npc_id}", kind="npc",
                name=npc.profile.name, type="npc",
                descriptors=npc.profile.appearance,
                pos=npc.pos, distance=dist, bearing=rel))

    room = world.room_of(robot.pos)
    return Observation(
        obs_id=obs_id,
        camera=camera,
        head_yaw=robot.head_yaw,
        heading=robot.heading,
        room_label=room.name if room else None,
        entities=tuple(entities),
    )


def get_scenario_assets(world: WorldState) -> dict:
    """Static, task-independent scenario bundle.

    Contains the projected obstacle maps, the room registry, portal and
    elevator locations, one textual panorama sample per room, and the ten
    customer self-descriptions.  Identical across tasks on the same world.
    """
    maps = []
    for grid in world.grids:
        occ = world.project_obstacle_map(grid.floor_index)
        maps.append({
            "floor": grid.floor_index,
            "rows": ["".join(str(int(occ[cx, cz])) for cx in range(grid.width))
                     for cz in range(grid.height)],
        })

    rooms = []
    for room_id in sorted(world.rooms):
        room = world.rooms[room_id]
        anchor = room.anchors[0]
        rooms.append({
            "id": room_id,
            "name": room.name,
            "floor": room.floor_index,
            "category": room.category,
            "center": anchor.as_list(),
        })

    panoramas = []
    for room_id in sorted(world.rooms):
        room = world.rooms[room_id]
        recs = sorted(r.name for r in world.receptacles.values() if r.room_id == room_id)
        listing = ", ".join(recs) if recs else "open floor"
        panoramas.append({
            "pos": room.anchors[0].as_list(),
            "room": room.name,
            "text": f"{room.name}: a {room.category} area; you can see {listing}.",
        })

    portals = []
    for pid in sorted(world.portals):
        p = world.portals[pid]
        portals.append({"id": pid, "kind": p.kind, "a": list(p.a), "b": list(p.b)})

    descriptions = [world.npcs[i].profile.description for i in sorted(world.npcs)]

    return {
        "cell_size": world.cell_size,
        "origin": [world.grids[0].origin.x, 0.0, world.grids[0].origin.z],
        "floor_height": world.floor_height,
        "obstacle_maps": maps,
        "rooms": rooms,
        "portals": portals,
        "elevator_doors": {str(f): list(cell) for f, cell in sorted(world.elevator.door_cells.items())},
        "panorama_samples": panoramas,
        "customer_descriptions": descriptions,
    }


# -- blocking convenience wrappers (mirror the wire-level skill names) -------

def goto_target_goal(episode, goal: Vec3, radius: float):
    return episode.run_command(GotoTargetGoal(goal, radius))


def request_elevator(episode, target_floor: int):
    return episode.run_command(RequestElevator(target_floor))


def observe(episode, camera: str = CAMERA_HEAD):
    return episode.run_command(Observe(camera))


def rotate_head(episode, yaw: float):
    return episode.run_command(RotateHead(yaw))


def object_interaction(episode, target_ref: str | None, manipulation: str,
                       floor_pos: tuple[float, float] | None = None):
    return episode.run_command(
        ObjectInteraction(manipulation=manipulation, target_ref=target_ref, floor_pos=floor_pos))


# -- wire codec ---------------------------------------------------------------

def command_to_wire(cmd: Command) -> dict:
    if isinstance(cmd, GotoTargetGoal):
        return {"name": "goto_target_goal",
                "args": {"goal": cmd.goal.as_list(), "radius": cmd.radius}}
    if isinstance(cmd, RequestElevator):
        return {"name": "request_elevator", "args": {"target_floor": cmd.target_floor}}
    if isinstance(cmd, Observe):
        return {"name": "observe", "args": {"camera": cmd.camera}}
    if isinstance(cmd, RotateHead):
        return {"name": "rotate_head", "args": {"yaw": cmd.yaw}}
    if isinstance(cmd, ObjectInteraction):
        args: dict = {"manipulation": cmd.manipulation}
        if cmd.target_ref is not None:
            args["target_ref"] = cmd.target_ref
        if cmd.floor_pos is not None:
            args["floor_pos"] = list(cmd.floor_pos)
        return {"name": "object_interaction", "args": args}
    raise TypeError(f"not a robot command: {cmd!r}")


def command_from_wire(msg: dict) -> Command:
    name = msg.get("name")
    args = msg.get("args", {})
    try:
        if name == "goto_target_goal":
            return GotoTargetGoal(Vec3.from_seq(args["goal"]), float(args["radius"]))
        if name == "request_elevator":
            return RequestElevator(int(args["target_floor"]))
        if name == "observe":
            camera = args.get("camera", CAMERA_HEAD)
            if camera not in (CAMERA_HEAD, CAMERA_ARM):
                raise ValueError(f"unknown camera {camera!r}")
            return Observe(camera)
        if name == "rotate_head":
            return RotateHead(float(args["yaw"]))
        if name == "object_interaction":
            manipulation = args["manipulation"]
            if manipulation not in (GRASP, PLACE):
                raise ValueError(f"unknown manipulation {manipulation!r}")
            floor_pos = args.get("floor_pos")
            return ObjectInteraction(
                manipulation=manipulation,
                target_ref=args.get("target_ref"),
                floor_pos=tuple(floor_pos) if floor_pos is not None else None)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad command payload for {name!r}: {exc}") from exc
    raise ValueError(f"unknown command {name!r}")
