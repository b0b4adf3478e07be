"""World model: building geometry, rooms, items, characters, and queries.

A world is described by a versioned JSON file (see ``data/default_world.json``)
and loaded into a :class:`WorldState`.  Loading is strict: every cross
reference must resolve and declared entity counts must match, so that a world
file is either fully usable or rejected with a precise error.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from importlib import resources
from typing import Iterable

import numpy as np

from .geometry import Vec3, supercover_cells

SCHEMA_VERSION = 1

# Cell codes, also the wire encoding inside obstacle maps.
FREE = 0
WALL = 1
FURNITURE = 2
PORTAL = 3

HOLDER_WORLD = "world"
HOLDER_ROBOT = "robot"

NPC_ACTIONS = ("sit", "stand", "walk", "work", "rest", "eat")

PORTAL_KIND_STAIRS = "stairs"
PORTAL_KIND_ELEVATOR = "elevator_door"

_GRID_CHARS = {"#": WALL, ".": FREE, "E": PORTAL, "S": PORTAL}


class WorldError(ValueError):
    """Raised when a world description fails validation."""


@dataclass(frozen=True)
class Portal:
    portal_id: str
    kind: str
    a: tuple[int, int, int]  # (floor, cx, cz)
    b: tuple[int, int, int]
    traversal_ticks: int

    def other_end(self, floor: int) -> tuple[int, int, int]:
        if self.a[0] == floor:
            return self.b
        if self.b[0] == floor:
            return self.a
        raise WorldError(f"portal {self.portal_id} has no endpoint on floor {floor}")


@dataclass
class FloorGrid:
    floor_index: int
    origin: Vec3  # world position of cell (0, 0)'s low corner
    cell_size: float
    width: int
    height: int
    cells: np.ndarray  # uint8 [width, height] of FREE/WALL/FURNITURE/PORTAL
    portal_at: dict[tuple[int, int], str] = field(default_factory=dict)

    def in_bounds(self, cx: int, cz: int) -> bool:
        return 0 <= cx < self.width and 0 <= cz < self.height

    def cell_of(self, pos: Vec3) -> tuple[int, int]:
        cx = int(math.floor((pos.x - self.origin.x) / self.cell_size))
        cz = int(math.floor((pos.z - self.origin.z) / self.cell_size))
        return cx, cz

    def center(self, cx: int, cz: int) -> Vec3:
        return Vec3(
            self.origin.x + (cx + 0.5) * self.cell_size,
            self.origin.y,
            self.origin.z + (cz + 0.5) * self.cell_size,
        )

    def walk_blocked(self) -> np.ndarray:
        """Cells the walkers may not enter (walls, furniture, portals)."""
        return self.cells != FREE

    def sight_blocked(self) -> np.ndarray:
        """Cells that occlude vision. Furniture is waist-high: see over it."""
        return self.cells == WALL


@dataclass(frozen=True)
class Room:
    room_id: str
    name: str
    floor_index: int
    category: str
    rects: tuple[tuple[int, int, int, int], ...]  # (cx0, cz0, cx1, cz1) inclusive
    anchors: tuple[Vec3, ...]

    def contains_cell(self, cx: int, cz: int) -> bool:
        return any(x0 <= cx <= x1 and z0 <= cz <= z1 for x0, z0, x1, z1 in self.rects)

    def cells(self) -> Iterable[tuple[int, int]]:
        for x0, z0, x1, z1 in self.rects:
            for cx in range(x0, x1 + 1):
                for cz in range(z0, z1 + 1):
                    yield cx, cz


@dataclass(frozen=True)
class Receptacle:
    receptacle_id: str
    name: str
    descriptor: str
    room_id: str
    rect: tuple[int, int, int, int]
    surface_height: float
    is_container: bool = False
    is_open: bool = True

    def contains_cell(self, cx: int, cz: int) -> bool:
        x0, z0, x1, z1 = self.rect
        return x0 <= cx <= x1 and z0 <= cz <= z1


@dataclass(frozen=True)
class ItemType:
    type_id: str
    noun: str
    descriptors: tuple[str, ...]       # e.g. ("blue",)
    phrase_descriptors: tuple[str, ...]  # richer variants, e.g. ("blue", "blue-packaged")
    instance_prefix: str
    graspable: bool = True


@dataclass
class Item:
    name: str
    type_id: str
    pos: Vec3
    graspable: bool
    holder: str  # HOLDER_WORLD, HOLDER_ROBOT, or a receptacle id
    descriptors: tuple[str, ...]


@dataclass(frozen=True)
class ScheduleEntry:
    start_s: int  # seconds since midnight
    end_s: int
    room_id: str
    action: str
    need: str | None = None  # item type demanded during this entry


@dataclass(frozen=True)
class NpcProfile:
    npc_id: int
    name: str
    occupation: str
    persona: str  # display noun used in directives ("woman", "man")
    room_number: int
    office_room: str
    appearance: tuple[str, ...]
    description: str
    schedule: tuple[ScheduleEntry, ...]

    def entry_at(self, time_of_day_s: int) -> tuple[int, ScheduleEntry] | None:
        for idx, entry in enumerate(self.schedule):
            if entry.start_s <= time_of_day_s < entry.end_s:
                return idx, entry
        return None


@dataclass
class NpcState:
    profile: NpcProfile
    pos: Vec3
    floor: int
    action: str
    # Walk progress: remaining waypoints on the current floor, then an optional
    # portal hop followed by more waypoints.  Empty when not walking.
    waypoints: list[Vec3] = field(default_factory=list)
    pending_portal: str | None = None
    portal_wait: int = 0
    after_action: str = "stand"
    entry_idx: int = -1
    dest: tuple[int, Vec3] | None = None  # (floor, point) while walking


@dataclass
class RobotState:
    pos: Vec3
    floor: int
    heading: float = 0.0
    head_yaw: float = 0.0
    held_item: str | None = None
    collision_count: int = 0


@dataclass
class Elevator:
    door_cells: dict[int, tuple[int, int]]
    car_cells: dict[int, tuple[int, int]]
    current_floor: int
    door_open: bool = False
    occupancy: str = "empty"  # "empty", "robot", or "npc:<id>"
    pending_calls: list[int] = field(default_factory=list)
    occupant_target: int | None = None
    door_timer: int = 0
    transit_timer: int = 0
    transit_target: int | None = None


@dataclass
class Clock:
    start: datetime
    tick_dt: float
    tick_index: int = 0

    @property
    def sim_datetime(self) -> datetime:
        return self.start + timedelta(seconds=self.tick_index * self.tick_dt)

    @property
    def time_of_day_s(self) -> int:
        t = self.sim_datetime
        return t.hour * 3600 + t.minute * 60 + t.second

    def iso(self) -> str:
        return self.sim_datetime.isoformat(timespec="seconds")


@dataclass
class WorldState:
    name: str
    cell_size: float
    floor_height: float
    tick_dt: float
    grids: list[FloorGrid]
    portals: dict[str, Portal]
    rooms: dict[str, Room]
    receptacles: dict[str, Receptacle]
    item_types: dict[str, ItemType]
    items: dict[str, Item]
    npcs: dict[int, NpcState]
    robot: RobotState
    elevator: Elevator
    clock: Clock
    robot_config: dict
    npc_speed: float
    elevator_timing: dict
    config: dict  # the validated source description

    # -- geometric queries -------------------------------------------------

    def floor_of(self, pos: Vec3) -> int:
        floor = int(round(pos.y / self.floor_height))
        return min(max(floor, 0), len(self.grids) - 1)

    def grid_of(self, pos: Vec3) -> FloorGrid:
        return self.grids[self.floor_of(pos)]

    def room_of(self, pos: Vec3) -> Room | None:
        """The unique room whose region contains pos's cell; None in corridors."""
        grid = self.grid_of(pos)
        cx, cz = grid.cell_of(pos)
        if not grid.in_bounds(cx, cz):
            raise WorldError(f"position ({pos.x}, {pos.z}) outside the floor-{grid.floor_index} map")
        for room in self.rooms.values():
            if room.floor_index == grid.floor_index and room.contains_cell(cx, cz):
                return room
        return None

    def line_of_sight(self, a: Vec3, b: Vec3) -> bool:
        """True when the grid ray between a and b crosses no wall cell.

        Both points must be on the same floor; furniture does not occlude.
        The check is symmetric by construction (endpoints are canonicalised).
        """
        if abs(a.y - b.y) >= self.floor_height:
            raise WorldError("line_of_sight is single-floor; endpoints span floors")
        if (b.x, b.z) < (a.x, a.z):
            a, b = b, a
        grid = self.grid_of(a)
        blocked = grid.sight_blocked()
        ax = (a.x - grid.origin.x) / grid.cell_size
        az = (a.z - grid.origin.z) / grid.cell_size
        bx = (b.x - grid.origin.x) / grid.cell_size
        bz = (b.z - grid.origin.z) / grid.cell_size
        for cx, cz in supercover_cells(ax, az, bx, bz):
            if grid.in_bounds(cx, cz) and blocked[cx, cz]:
                return False
        return True

    def project_obstacle_map(self, floor_index: int) -> np.ndarray:
        """Top-down occupancy grid: 1 for walls, fixed furniture, and portals."""
        if not 0 <= floor_index < len(self.grids):
            raise WorldError(f"no floor {floor_index}; world has {len(self.grids)} floors")
        return (self.grids[floor_index].cells != FREE).astype(np.uint8)

    def ascii_floor(self, floor_index: int) -> str:
        """Debug map: '#' obstacle, '.' free, 'E' elevator door, 'S' stairs."""
        grid = self.grids[floor_index]
        rows = []
        for cz in range(grid.height):
            row = []
            for cx in range(grid.width):
                code = grid.cells[cx, cz]
                if code == PORTAL:
                    kind = self.portals[grid.portal_at[(cx, cz)]].kind
                    row.append("E" if kind == PORTAL_KIND_ELEVATOR else "S")
                elif code == FREE:
                    row.append(".")
                else:
                    row.append("#")
            rows.append("".join(row))
        return "\n".join(rows)

    def receptacle_under(self, pos: Vec3) -> Receptacle | None:
        floor = self.floor_of(pos)
        grid = self.grids[floor]
        cx, cz = grid.cell_of(pos)
        for rec in self.receptacles.values():
            if self.rooms[rec.room_id].floor_index == floor and rec.contains_cell(cx, cz):
                return rec
        return None

    def item_enclosed(self, item: Item) -> bool:
        rec = self.receptacles.get(item.holder)
        return rec is not None and rec.is_container and not rec.is_open

    def npcs_sorted(self) -> list[NpcState]:
        return [self.npcs[i] for i in sorted(self.npcs)]

    # -- hashing and serialization ----------------------------------------

    def tick_hash(self) -> str:
        """Digest of the dynamic state; the per-tick replay fingerprint."""
        r = self.robot
        parts = [
            f"{self.clock.tick_index}",
            f"{r.pos.x!r},{r.pos.y!r},{r.pos.z!r},{r.heading!r},{r.head_yaw!r},"
            f"{r.held_item},{r.collision_count},{r.floor}",
        ]
        for npc in self.npcs_sorted():
            parts.append(
                f"{npc.profile.npc_id}:{npc.pos.x!r},{npc.pos.y!r},{npc.pos.z!r},"
                f"{npc.action},{npc.floor},{len(npc.waypoints)}"
            )
        ev = self.elevator
        parts.append(
            f"ev:{ev.current_floor},{int(ev.door_open)},{ev.occupancy},"
            f"{','.join(map(str, ev.pending_calls))},{ev.occupant_target},"
            f"{ev.door_timer},{ev.transit_timer},{ev.transit_target}"
        )
        for name in sorted(self.items):
            it = self.items[name]
            parts.append(f"{name}:{it.holder}:{it.pos.x!r},{it.pos.y!r},{it.pos.z!r}")
        digest = hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()
        return digest[:16]

    def state_hash(self) -> str:
        """Digest covering the full state, including static geometry."""
        blob = json.dumps(self.to_config(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_config(self) -> dict:
        """Serialize back to the world-description schema (current item state)."""
        cfg = json.loads(json.dumps(self.config))  # deep copy of the static part
        cfg["items"] = [
            {
                "name": it.name,
                "type": it.type_id,
                "holder": it.holder,
                "pos": [it.pos.x, it.pos.y, it.pos.z],
            }
            for it in (self.items[k] for k in sorted(self.items))
        ]
        return cfg


# ---------------------------------------------------------------------------
# Loading


def _require(cond: bool, msg: str):
    if not cond:
        raise WorldError(msg)


def _parse_time_of_day(text: str) -> int:
    h, m = text.split(":")
    return int(h) * 3600 + int(m) * 60


def load_world(source: str | dict | None = None) -> WorldState:
    """Load and validate a world description.

    ``source`` may be a path to a JSON file, an already-parsed dict, or None
    for the bundled default world.  Raises :class:`WorldError` naming the
    offending field or id on any integrity violation.
    """
    if source is None:
        cfg = json.loads(resources.files("deliverysim.data").joinpath("default_world.json").read_text())
    elif isinstance(source, dict):
        cfg = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)

    _require(cfg.get("schema_version") == SCHEMA_VERSION,
             f"schema_version: expected {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}")
    for key in ("cell_size", "floor_height", "tick_dt", "origin", "floors", "portals",
                "elevator", "rooms", "receptacles", "item_types", "items", "npcs",
                "robot", "counts"):
        _require(key in cfg, f"missing top-level field '{key}'")

    cell_size = float(cfg["cell_size"])
    floor_height = float(cfg["floor_height"])
    origin = cfg["origin"]

    portals: dict[str, Portal] = {}
    for p in cfg["portals"]:
        portal = Portal(p["id"], p["kind"], tuple(p["a"]), tuple(p["b"]),
                        int(p.get("traversal_ticks", 0)))
        _require(portal.kind in (PORTAL_KIND_STAIRS, PORTAL_KIND_ELEVATOR),
                 f"portal {portal.portal_id}: unknown kind {portal.kind!r}")
        if portal.kind == PORTAL_KIND_STAIRS:
            _require(portal.a[0] != portal.b[0],
                     f"portal {portal.portal_id}: stairs endpoints on the same floor")
        else:
            _require(portal.a[1:] == portal.b[1:],
                     f"portal {portal.portal_id}: elevator endpoints must share the shaft column")
        _require(portal.portal_id not in portals, f"duplicate portal id {portal.portal_id}")
        portals[portal.portal_id] = portal

    grids: list[FloorGrid] = []
    for fl in cfg["floors"]:
        idx = int(fl["index"])
        rows = fl["rows"]
        height = len(rows)
        width = len(rows[0])
        _require(all(len(r) == width for r in rows), f"floor {idx}: ragged grid rows")
        cells = np.zeros((width, height), dtype=np.uint8)
        for cz, row in enumerate(rows):
            for cx, ch in enumerate(row):
                _require(ch in _GRID_CHARS, f"floor {idx}: bad grid char {ch!r} at ({cx}, {cz})")
                cells[cx, cz] = _GRID_CHARS[ch]
        grid = FloorGrid(
            floor_index=idx,
            origin=Vec3(float(origin[0]), idx * floor_height, float(origin[2])),
            cell_size=cell_size,
            width=width,
            height=height,
            cells=cells,
        )
        for cx in range(width):
            _require(cells[cx, 0] != FREE and cells[cx, height - 1] != FREE,
                     f"floor {idx}: border cell ({cx}) not obstacle")
        for cz in range(height):
            _require(cells[0, cz] != FREE and cells[width - 1, cz] != FREE,
                     f"floor {idx}: border cell (z={cz}) not obstacle")
        grids.append(grid)
    _require([g.floor_index for g in grids] == list(range(len(grids))),
             "floors must be contiguous starting at 0")

    # Portal cells must be marked on the grids, and vice versa.
    for portal in portals.values():
        for floor, cx, cz in (portal.a, portal.b):
            grid = grids[floor]
            _require(grid.in_bounds(cx, cz), f"portal {portal.portal_id}: cell off-grid")
            _require(grid.cells[cx, cz] == PORTAL,
                     f"portal {portal.portal_id}: grid cell ({cx},{cz}) on floor {floor} is not marked")
            grid.portal_at[(cx, cz)] = portal.portal_id
    for grid in grids:
        marked = int((grid.cells == PORTAL).sum())
        _require(marked == len(grid.portal_at),
                 f"floor {grid.floor_index}: {marked} portal cells but {len(grid.portal_at)} portal references")

    rooms: dict[str, Room] = {}
    for r in cfg["rooms"]:
        room = Room(
            room_id=r["id"],
            name=r["name"],
            floor_index=int(r["floor"]),
            category=r["category"],
            rects=tuple(tuple(rect) for rect in r["rects"]),
            anchors=tuple(Vec3.from_seq(a) for a in r["anchors"]),
        )
        _require(room.room_id not in rooms, f"duplicate room id {room.room_id}")
        _require(room.floor_index < len(grids), f"room {room.room_id}: bad floor")
        _require(len(room.anchors) > 0, f"room {room.room_id}: no anchors")
        rooms[room.room_id] = room
    seen_cells: dict[tuple[int, int, int], str] = {}
    for room in rooms.values():
        for cx, cz in room.cells():
            key = (room.floor_index, cx, cz)
            _require(key not in seen_cells,
                     f"rooms {seen_cells.get(key)} and {room.room_id} overlap at {key}")
            seen_cells[key] = room.room_id
    _require(len(rooms) == int(cfg["counts"]["rooms"]),
             f"room count mismatch: declared {cfg['counts']['rooms']}, found {len(rooms)}")

    receptacles: dict[str, Receptacle] = {}
    for r in cfg["receptacles"]:
        rec = Receptacle(
            receptacle_id=r["id"],
            name=r["name"],
            descriptor=r.get("descriptor", ""),
            room_id=r["room"],
            rect=tuple(r["rect"]),
            surface_height=float(r["surface_height"]),
            is_container=bool(r.get("container", False)),
            is_open=bool(r.get("open", True)),
        )
        _require(rec.receptacle_id not in receptacles, f"duplicate receptacle id {rec.receptacle_id}")
        _require(rec.room_id in rooms, f"receptacle {rec.receptacle_id}: unknown room {rec.room_id}")
        room = rooms[rec.room_id]
        x0, z0, x1, z1 = rec.rect
        for cx, cz in ((x0, z0), (x1, z1)):
            _require(room.contains_cell(cx, cz),
                     f"receptacle {rec.receptacle_id}: rect leaves room {rec.room_id}")
        receptacles[rec.receptacle_id] = rec

    # Stamp furniture footprints onto the walk grids.
    for rec in receptacles.values():
        grid = grids[rooms[rec.room_id].floor_index]
        x0, z0, x1, z1 = rec.rect
        for cx in range(x0, x1 + 1):
            for cz in range(z0, z1 + 1):
                _require(grid.cells[cx, cz] in (FREE, FURNITURE),
                         f"receptacle {rec.receptacle_id}: footprint hits a wall at ({cx},{cz})")
                grid.cells[cx, cz] = FURNITURE

    item_types: dict[str, ItemType] = {}
    for t in cfg["item_types"]:
        itype = ItemType(
            type_id=t["id"],
            noun=t["noun"],
            descriptors=tuple(t["descriptors"]),
            phrase_descriptors=tuple(t.get("phrase_descriptors", t["descriptors"])),
            instance_prefix=t["instance_prefix"],
            graspable=bool(t.get("graspable", True)),
        )
        _require(itype.type_id not in item_types, f"duplicate item type {itype.type_id}")
        item_types[itype.type_id] = itype
    _require(len(item_types) == int(cfg["counts"]["item_types"]),
             f"item type registry mismatch: declared {cfg['counts']['item_types']}, found {len(item_types)}")

    items: dict[str, Item] = {}
    for i in cfg["items"]:
        _require(i["type"] in item_types, f"item {i['name']}: unknown type {i['type']}")
        holder = i.get("holder", HOLDER_WORLD)
        if holder not in (HOLDER_WORLD, HOLDER_ROBOT):
            _require(holder in receptacles,
                     f"item {i['name']}: holder references unknown receptacle {holder!r}")
        itype = item_types[i["type"]]
        item = Item(
            name=i["name"],
            type_id=i["type"],
            pos=Vec3.from_seq(i["pos"]),
            graspable=itype.graspable,
            holder=holder,
            descriptors=itype.descriptors,
        )
        _require(item.name not in items, f"duplicate item instance {item.name}")
        items[item.name] = item

    npcs: dict[int, NpcState] = {}
    for n in cfg["npcs"]:
        schedule = []
        for e in n["schedule"]:
            entry = ScheduleEntry(
                start_s=_parse_time_of_day(e["start"]),
                end_s=_parse_time_of_day(e["end"]),
                room_id=e["room"],
                action=e["action"],
                need=e.get("need"),
            )
            _require(entry.end_s > entry.start_s,
                     f"npc {n['id']}: schedule entry ends before it starts ({e['start']})")
            _require(entry.room_id in rooms, f"npc {n['id']}: unknown room {entry.room_id}")
            _require(entry.action in NPC_ACTIONS, f"npc {n['id']}: unknown action {entry.action}")
            if entry.need is not None:
                _require(entry.need in item_types, f"npc {n['id']}: unknown need type {entry.need}")
            schedule.append(entry)
        schedule.sort(key=lambda e: e.start_s)
        for prev, nxt in zip(schedule, schedule[1:]):
            _require(prev.end_s <= nxt.start_s,
                     f"npc {n['id']}: overlapping schedule entries at {nxt.start_s}s")
        profile = NpcProfile(
            npc_id=int(n["id"]),
            name=n["name"],
            occupation=n["occupation"],
            persona=n["persona"],
            room_number=int(n["room_number"]),
            office_room=n["office_room"],
            appearance=tuple(n["appearance"]),
            description=n["description"],
            schedule=tuple(schedule),
        )
        _require(profile.npc_id not in npcs, f"duplicate npc id {profile.npc_id}")
        _require(profile.name in profile.description,
                 f"npc {profile.npc_id}: description does not mention the name")
        for phrase in profile.appearance:
            _require(phrase in profile.description,
                     f"npc {profile.npc_id}: description does not mention {phrase!r}")
        start_room = rooms[profile.schedule[0].room_id]
        npcs[profile.npc_id] = NpcState(
            profile=profile,
            pos=start_room.anchors[0],
            floor=start_room.floor_index,
            action=profile.schedule[0].action,
        )
    _require(len(npcs) == int(cfg["counts"]["npcs"]),
             f"npc count mismatch: declared {cfg['counts']['npcs']}, found {len(npcs)}")

    ev_cfg = cfg["elevator"]
    elevator = Elevator(
        door_cells={int(k): tuple(v) for k, v in ev_cfg["door_cells"].items()},
        car_cells={int(k): tuple(v) for k, v in ev_cfg["car_cells"].items()},
        current_floor=int(ev_cfg.get("initial_floor", 0)),
    )
    for floor, cell in elevator.door_cells.items():
        _require(grids[floor].cells[cell] == PORTAL,
                 f"elevator door cell {cell} on floor {floor} is not a portal cell")

    robot_cfg = cfg["robot"]
    spawn = Vec3.from_seq(robot_cfg["spawn"])
    robot = RobotState(pos=spawn, floor=0)

    clock = Clock(start=datetime.fromisoformat(cfg.get("start_time", "2025-01-01T08:00:00")),
                  tick_dt=float(cfg["tick_dt"]))

    world = WorldState(
        name=cfg.get("name", "unnamed"),
        cell_size=cell_size,
        floor_height=floor_height,
        tick_dt=float(cfg["tick_dt"]),
        grids=grids,
        portals=portals,
        rooms=rooms,
        receptacles=receptacles,
        item_types=item_types,
        items=items,
        npcs=npcs,
        robot=robot,
        elevator=elevator,
        clock=clock,
        robot_config=robot_cfg,
        npc_speed=float(cfg.get("npc_speed", 1.2)),
        elevator_timing=dict(cfg.get("elevator_timing", {"door_ticks": 30, "transit_ticks_per_floor": 50})),
        config=cfg,
    )

    # Positional integrity: anchors, spawn, and loose items sit on free cells.
    for room in rooms.values():
        grid = grids[room.floor_index]
        for anchor in room.anchors:
            cx, cz = grid.cell_of(anchor)
            _require(room.contains_cell(cx, cz), f"room {room.room_id}: anchor outside its region")
            _require(grid.cells[cx, cz] == FREE, f"room {room.room_id}: anchor on a blocked cell")
    sx, sz = grids[0].cell_of(spawn)
    _require(grids[0].in_bounds(sx, sz) and grids[0].cells[sx, sz] == FREE,
             "robot spawn is not on a free floor-0 cell")
    for item in items.values():
        if item.holder in receptacles:
            rec = receptacles[item.holder]
            _require(rec.contains_cell(*world.grid_of(item.pos).cell_of(item.pos)),
                     f"item {item.name}: position outside its holder {item.holder}")
            _require(abs(item.pos.y - (rooms[rec.room_id].floor_index * floor_height + rec.surface_height)) < 0.05,
                     f"item {item.name}: height does not match surface of {item.holder}")
    return world


def default_world() -> WorldState:
    """Load the bundled three-floor default world."""
    return load_world(None)
