"""Builder for the bundled default world: a three-floor research station.

The building is a 40 m x 20 m footprint per floor on a 0.25 m grid:

* floor 0 - kitchen, living room, leisure room, gym, storage room, plus an
  open commons area where the robot spawns at world origin (0, 0, 0);
* floor 1 - four offices, lab, medical room, two wards;
* floor 2 - ten private rooms.

Rooms sit on both sides of an east-west corridor.  A stairwell pair connects
adjacent floors and a single elevator shaft serves all three.  The output of
:func:`build_default_world_config` is the dict form of the world-description
schema; ``data/default_world.json`` is exactly this dict serialized.
"""

from __future__ import annotations

import json

GRID_W = 160
GRID_H = 80
CELL = 0.25
ORIGIN = (-36.0, 0.0, -14.0)
FLOOR_HEIGHT = 3.0
TICK_DT = 0.1

NORTH_WALL_ROW = 35   # wall row between north rooms and corridor
SOUTH_WALL_ROW = 44   # wall row between corridor and south rooms
NORTH_Z = (1, 34)
SOUTH_Z = (45, 78)

STAIRS_01 = (155, 38)
STAIRS_12 = (150, 38)
ELEV_DOOR = (4, 44)
ELEV_CAR = (4, 46)
ELEV_SHAFT = (2, 44, 6, 48)  # walled block around the car

# (room_id, display name, category, floor, side, cx0, cx1, door cx range)
_ROOMS = [
    ("living_room", "living room", "living", 0, "N", 1, 44, (20, 23)),
    ("leisure_room", "leisure room", "leisure", 0, "N", 46, 62, (52, 55)),
    ("kitchen", "kitchen", "kitchen", 0, "N", 64, 95, (78, 81)),
    ("gym", "gym", "gym", 0, "N", 97, 158, (124, 127)),
    ("storage_room", "storage room", "storage", 0, "S", 1, 75, (20, 23)),
    ("office_1", "office 1", "office", 1, "N", 1, 38, (18, 21)),
    ("office_2", "office 2", "office", 1, "N", 40, 77, (56, 59)),
    ("office_3", "office 3", "office", 1, "N", 79, 116, (95, 98)),
    ("office_4", "office 4", "office", 1, "N", 118, 158, (136, 139)),
    ("lab", "lab", "lab", 1, "S", 1, 45, (20, 23)),
    ("medical_room", "medical room", "medical", 1, "S", 47, 90, (66, 69)),
    ("ward_1", "ward 1", "ward", 1, "S", 92, 124, (106, 109)),
    ("ward_2", "ward 2", "ward", 1, "S", 126, 158, (140, 143)),
    ("room_1", "room 1", "bedroom", 2, "N", 1, 31, (14, 17)),
    ("room_2", "room 2", "bedroom", 2, "N", 33, 62, (46, 49)),
    ("room_3", "room 3", "bedroom", 2, "N", 64, 93, (76, 79)),
    ("room_4", "room 4", "bedroom", 2, "N", 95, 124, (107, 110)),
    ("room_5", "room 5", "bedroom", 2, "N", 126, 158, (140, 143)),
    ("room_6", "room 6", "bedroom", 2, "S", 1, 31, (14, 17)),
    ("room_7", "room 7", "bedroom", 2, "S", 33, 62, (46, 49)),
    ("room_8", "room 8", "bedroom", 2, "S", 64, 93, (76, 79)),
    ("room_9", "room 9", "bedroom", 2, "S", 95, 124, (107, 110)),
    ("room_10", "room 10", "bedroom", 2, "S", 126, 158, (140, 143)),
]

# Door gaps from the open commons area (floor 0 south, no room) to the corridor.
_COMMONS_DOORS = [(100, 103), (140, 143)]
_COMMONS_X = (77, 158)

# (receptacle id, room, display name, descriptor, surface height, placement)
# placement: "top" along the room's outer wall, "mid" free-standing, or an
# explicit cell rect.  Depths keep every surface point within the 1.2 m
# grasp reach from an adjacent free cell.
_RECEPTACLES = [
    ("kitchen.dining_table", "kitchen", "dining table", "wooden", 0.76, (74, 31, 79, 34)),
    ("kitchen.counter", "kitchen", "kitchen counter", "white", 0.9, "top3x12"),
    ("living_room.coffee_table", "living_room", "coffee table", "glass", 0.5, "mid4x6"),
    ("living_room.shelf", "living_room", "display shelf", "wooden", 1.0, "top2x10"),
    ("leisure_room.game_table", "leisure_room", "game table", "green", 0.76, "mid4x6"),
    ("leisure_room.side_table", "leisure_room", "side table", "metal", 0.6, "top3x6"),
    ("gym.rack", "gym", "equipment rack", "steel", 1.0, "top2x12"),
    ("gym.bench", "gym", "gym bench", "black", 0.5, "mid3x8"),
    ("storage_room.shelf", "storage_room", "storage shelf", "metal", 1.0, "top2x12"),
    ("storage_room.crate", "storage_room", "supply crate", "wooden", 0.5, "mid4x6"),
    ("office_1.desk", "office_1", "desk", "wooden", 0.76, "mid3x8"),
    ("office_1.cabinet", "office_1", "file cabinet", "grey", 1.0, "top2x6"),
    ("office_2.desk", "office_2", "desk", "wooden", 0.76, "mid3x8"),
    ("office_2.cabinet", "office_2", "file cabinet", "grey", 1.0, "top2x6"),
    ("office_3.desk", "office_3", "desk", "wooden", 0.76, "mid3x8"),
    ("office_3.cabinet", "office_3", "file cabinet", "grey", 1.0, "top2x6"),
    ("office_4.desk", "office_4", "desk", "wooden", 0.76, "mid3x8"),
    ("office_4.cabinet", "office_4", "file cabinet", "grey", 1.0, "top2x6"),
    ("lab.bench", "lab", "lab bench", "white", 0.9, "top3x12"),
    ("lab.shelf", "lab", "sample shelf", "steel", 1.0, "mid2x8"),
    ("medical_room.cabinet", "medical_room", "medicine cabinet", "white", 1.0, "top2x8"),
    ("medical_room.table", "medical_room", "treatment table", "white", 0.76, "mid3x8"),
    ("ward_1.bedside_table", "ward_1", "bedside table", "wooden", 0.6, "top3x4"),
    ("ward_1.bed", "ward_1", "bed", "white", 0.5, "mid4x8"),
    ("ward_2.bedside_table", "ward_2", "bedside table", "wooden", 0.6, "top3x4"),
    ("ward_2.bed", "ward_2", "bed", "white", 0.5, "mid4x8"),
]
for _i in range(1, 11):
    _RECEPTACLES.append(
        (f"room_{_i}.bedside_table", f"room_{_i}", "bedside table", "wooden", 0.6, "top3x4"))
    _RECEPTACLES.append(
        (f"room_{_i}.desk", f"room_{_i}", "desk", "wooden", 0.76, "mid3x6"))

# The 47-entry delivery item registry.
# (type id, noun, primary descriptors, extra phrase descriptors, prefix, homes)
_ITEM_TYPES = [
    ("WaterBottleBlue", "water bottle", ["blue"], ["blue-packaged"], "WaterBottle_Blue",
     ["kitchen.dining_table", "gym.bench"]),
    ("WaterBottleGreen", "water bottle", ["green"], [], "WaterBottle_Green",
     ["kitchen.counter", "gym.rack"]),
    ("CupWhite", "cup", ["white"], [], "Cup_White", ["kitchen.counter", "office_2.desk"]),
    ("CupBlack", "cup", ["black"], [], "Cup_Black", ["office_1.desk"]),
    ("MugRed", "mug", ["red"], [], "Mug_Red", ["kitchen.counter", "living_room.coffee_table"]),
    ("AppleRed", "apple", ["red"], [], "Apple_Red", ["kitchen.dining_table", "kitchen.counter"]),
    ("AppleGreen", "apple", ["green"], [], "Apple_Green", ["kitchen.counter"]),
    ("Banana", "banana", ["yellow"], [], "Banana", ["kitchen.counter"]),
    ("Orange", "orange", ["fresh"], [], "Orange", ["kitchen.dining_table"]),
    ("Sandwich", "sandwich", ["wrapped"], [], "Sandwich", ["kitchen.counter"]),
    ("BreadLoaf", "bread loaf", ["brown"], [], "Bread_Loaf", ["kitchen.counter"]),
    ("ChocolateBar", "chocolate bar", ["dark"], [], "Chocolate_Bar",
     ["kitchen.counter", "leisure_room.side_table"]),
    ("ChipsBag", "chips bag", ["foil"], [], "Chips_Bag", ["leisure_room.side_table"]),
    ("CoffeeCup", "coffee cup", ["paper"], [], "Coffee_Cup", ["kitchen.counter", "office_3.desk"]),
    ("TeaCup", "tea cup", ["porcelain"], [], "Tea_Cup", ["living_room.coffee_table"]),
    ("JuiceBox", "juice box", ["purple"], [], "Juice_Box", ["kitchen.counter"]),
    ("MilkCarton", "milk carton", ["white"], [], "Milk_Carton", ["kitchen.counter"]),
    ("MobilePhoneBlack", "mobile phone", ["black"], [], "MobilePhone_Black",
     ["office_1.desk", "living_room.coffee_table"]),
    ("MobilePhoneWhite", "mobile phone", ["white"], [], "MobilePhone_White",
     ["office_4.desk", "room_3.desk"]),
    ("TabletGrey", "tablet", ["grey"], [], "Tablet_Grey", ["office_2.desk"]),
    ("LaptopSilver", "laptop", ["silver"], [], "Laptop_Silver", ["office_3.desk"]),
    ("BookBlue", "book", ["blue"], [], "Book_Blue", ["living_room.shelf"]),
    ("BookRed", "book", ["red"], [], "Book_Red", ["room_1.desk"]),
    ("NotebookYellow", "notebook", ["yellow"], [], "Notebook_Yellow",
     ["office_1.desk", "room_2.desk"]),
    ("PenBlack", "pen", ["black"], [], "Pen_Black", ["office_2.desk"]),
    ("PencilCaseGreen", "pencil case", ["green"], [], "PencilCase_Green", ["room_4.desk"]),
    ("Clipboard", "clipboard", ["brown"], [], "Clipboard", ["lab.bench", "medical_room.cabinet"]),
    ("Stapler", "stapler", ["black"], [], "Stapler", ["office_4.desk"]),
    ("ScissorsSteel", "scissors", ["steel"], [], "Scissors_Steel", ["lab.shelf"]),
    ("FlashlightYellow", "flashlight", ["yellow"], [], "Flashlight_Yellow", ["storage_room.shelf"]),
    ("BatteryPack", "battery pack", ["black"], [], "Battery_Pack", ["storage_room.crate"]),
    ("FirstAidKitWhite", "first aid kit", ["white"], [], "FirstAidKit_White",
     ["medical_room.cabinet", "gym.rack"]),
    ("PillBottleWhite", "pill bottle", ["white"], [], "PillBottle_White", ["medical_room.cabinet"]),
    ("ThermometerGrey", "thermometer", ["grey"], [], "Thermometer_Grey", ["medical_room.table"]),
    ("BandageRoll", "bandage roll", ["white"], [], "Bandage_Roll",
     ["ward_1.bedside_table", "medical_room.cabinet"]),
    ("TowelWhite", "towel", ["white"], [], "Towel_White", ["gym.bench", "ward_2.bedside_table"]),
    ("SoapBarGreen", "soap bar", ["green"], [], "SoapBar_Green", ["room_5.bedside_table"]),
    ("ToothbrushBlue", "toothbrush", ["blue"], [], "Toothbrush_Blue", ["room_6.bedside_table"]),
    ("HairbrushBrown", "hairbrush", ["brown"], [], "Hairbrush_Brown", ["room_7.bedside_table"]),
    ("UmbrellaBlack", "umbrella", ["black"], [], "Umbrella_Black", ["living_room.shelf"]),
    ("GlovesBlue", "gloves", ["blue"], [], "Gloves_Blue", ["storage_room.shelf", "lab.bench"]),
    ("ScarfRed", "scarf", ["red"], [], "Scarf_Red", ["room_8.bedside_table"]),
    ("CapGrey", "cap", ["grey"], [], "Cap_Grey", ["room_9.desk"]),
    ("KeycardWhite", "keycard", ["white"], [], "Keycard_White",
     ["office_1.desk", "room_10.desk"]),
    ("ScrewdriverRed", "screwdriver", ["red"], [], "Screwdriver_Red", ["storage_room.crate"]),
    ("TapeMeasureYellow", "tape measure", ["yellow"], [], "TapeMeasure_Yellow",
     ["storage_room.shelf"]),
    ("WrenchSteel", "wrench", ["steel"], [], "Wrench_Steel", ["storage_room.crate"]),
]

# (id, name, occupation, persona, room number, work room id, appearance)
_NPCS = [
    (0, "John", "station supervisor", "man", 2, "office_2",
     ["white shirt", "brown jacket"],
     "I'm John, the station supervisor here at the polar research station. My room number "
     "is 2, and my office is located in office 2. Meetings keep me moving all day. You will "
     "usually spot me in a white shirt and a brown jacket."),
    (1, "Imani", "scientific advisor", "woman", 1, "office_1",
     ["blue shirt", "black glasses"],
     "I'm Imani, a scientific advisor at a polar research station. My room number is 1, and "
     "my office is located in office 1. I often lead a regular life. My fashion preferences "
     "include blue shirts and black glasses."),
    (2, "Wei", "atmospheric scientist", "man", 3, "lab",
     ["green sweater", "silver watch"],
     "I'm Wei, an atmospheric scientist. My room number is 3 and most of my day happens in "
     "the lab. I wear a green sweater against the cold and never take off my silver watch."),
    (3, "Sofia", "station physician", "woman", 4, "medical_room",
     ["white coat", "red scarf"],
     "I'm Sofia, the station physician. My room number is 4; you can find me in the medical "
     "room during working hours, in my white coat and a red scarf."),
    (4, "Amara", "field nurse", "woman", 5, "ward_1",
     ["purple cardigan", "white sneakers"],
     "I'm Amara, a field nurse looking after ward 1. My room number is 5. I favor a purple "
     "cardigan and white sneakers on shift."),
    (5, "Viktor", "maintenance technician", "man", 6, "storage_room",
     ["orange vest", "black boots"],
     "I'm Viktor, the maintenance technician. My room number is 6 and my workshop corner is "
     "the storage room. Look for the orange vest and black boots."),
    (6, "Naoko", "communications officer", "woman", 7, "office_3",
     ["yellow jacket", "round glasses"],
     "I'm Naoko, the communications officer. My room number is 7, and my office is located "
     "in office 3. I usually wear a yellow jacket and round glasses."),
    (7, "Diego", "logistics coordinator", "man", 8, "office_4",
     ["red flannel shirt", "grey beanie"],
     "I'm Diego, the logistics coordinator. My room number is 8, and my office is located "
     "in office 4. My red flannel shirt and grey beanie give me away."),
    (8, "Fatima", "fitness instructor", "woman", 9, "gym",
     ["teal tracksuit", "white headband"],
     "I'm Fatima, the fitness instructor. My room number is 9 and I run sessions in the gym "
     "most of the day, in a teal tracksuit and a white headband."),
    (9, "Lars", "station chef", "man", 10, "kitchen",
     ["white apron", "blue bandana"],
     "I'm Lars, the station chef. My room number is 10 and the kitchen is my territory. I "
     "cook in a white apron and a blue bandana."),
]

_WORK_ACTION = {
    "office": "work", "lab": "work", "medical": "work", "ward": "work",
    "storage": "work", "gym": "stand", "kitchen": "work",
}
_EVENING_ROOMS = ["gym", "living_room", "leisure_room"]


def _minutes(h, m=0):
    return h * 60 + m


def _hm(total_minutes):
    return f"{total_minutes // 60:02d}:{total_minutes % 60:02d}"


def _build_schedules():
    """Per-NPC daily schedules with five need slots each.

    Needs rotate through the full item registry so every delivery category is
    demanded by someone during the day; Imani's lunch demand is pinned to the
    blue water bottle.
    """
    from collections import deque

    rotation = deque(t[0] for t in _ITEM_TYPES if t[0] != "WaterBottleBlue")
    rec_room = {r[0]: r[1] for r in _RECEPTACLES}
    type_rooms = {t[0]: {rec_room[h] for h in t[5]} for t in _ITEM_TYPES}

    def next_need(room):
        # A demand is only samplable when some instance sits farther than 3 m,
        # so avoid types whose every instance lives in the demanding room;
        # skipped types go back to the front for the next slot.
        skipped = []
        need = None
        for _ in range(len(rotation)):
            cand = rotation.popleft()
            if type_rooms[cand] != {room}:
                need = cand
                break
            skipped.append(cand)
        rotation.extendleft(reversed(skipped))
        if need is None:
            return rotation[0]
        rotation.append(need)
        return need

    schedules = {}
    for npc_id, _name, _occ, _persona, room_number, work_room, _app, _desc in (
            (n[0], n[1], n[2], n[3], n[4], n[5], n[6], n[7]) for n in _NPCS):
        bed = f"room_{room_number}"
        work_cat = next(cat for rid, _n, cat, *_ in _ROOMS if rid == work_room)
        work_action = _WORK_ACTION[work_cat]
        lunch_start = _minutes(12) + (npc_id % 4) * 30
        evening = _EVENING_ROOMS[npc_id % 3]
        evening_action = "stand" if evening == "gym" else "sit"
        entries = [
            (_minutes(6, 30), _minutes(7, 30), bed, "rest", None),
            (_minutes(7, 30), _minutes(8, 30), "kitchen", "eat", next_need("kitchen")),
            (_minutes(8, 30), lunch_start, work_room, work_action, next_need(work_room)),
            (lunch_start, lunch_start + 60, "kitchen", "sit",
             "WaterBottleBlue" if npc_id == 1 else next_need("kitchen")),
            (lunch_start + 60, _minutes(17), work_room, work_action, next_need(work_room)),
            (_minutes(17), _minutes(18, 30), evening, evening_action, next_need(evening)),
            (_minutes(18, 30), _minutes(19, 30), "kitchen", "eat", None),
            (_minutes(19, 30), _minutes(21, 30),
             "living_room" if npc_id % 2 == 0 else "leisure_room", "sit",
             next_need("living_room" if npc_id % 2 == 0 else "leisure_room")),
            (_minutes(21, 30), _minutes(22, 30), bed, "rest", next_need(bed)),
        ]
        schedules[npc_id] = [
            {"start": _hm(s), "end": _hm(e), "room": room, "action": action,
             **({"need": need} if need else {})}
            for s, e, room, action, need in entries
        ]
    return schedules


def _room_band(side):
    return NORTH_Z if side == "N" else SOUTH_Z


def _build_grid(floor):
    """Wall layout for one floor as a cell matrix (row-major [cz][cx])."""
    grid = [["." for _ in range(GRID_W)] for _ in range(GRID_H)]
    for cx in range(GRID_W):
        grid[0][cx] = "#"
        grid[GRID_H - 1][cx] = "#"
        grid[NORTH_WALL_ROW][cx] = "#"
        grid[SOUTH_WALL_ROW][cx] = "#"
    for cz in range(GRID_H):
        grid[cz][0] = "#"
        grid[cz][GRID_W - 1] = "#"

    rooms_here = [r for r in _ROOMS if r[3] == floor]
    for _rid, _name, _cat, _floor, side, cx0, cx1, door in rooms_here:
        z0, z1 = _room_band(side)
        # Dividing walls on both sides of the room's cx range.
        for cz in range(z0 - 1, z1 + 2):
            if 0 <= cz < GRID_H:
                if cx0 - 1 >= 0:
                    grid[cz][cx0 - 1] = "#"
                if cx1 + 1 < GRID_W:
                    grid[cz][cx1 + 1] = "#"
        wall_row = NORTH_WALL_ROW if side == "N" else SOUTH_WALL_ROW
        for cx in range(door[0], door[1] + 1):
            grid[wall_row][cx] = "."

    if floor == 0:
        for d0, d1 in _COMMONS_DOORS:
            for cx in range(d0, d1 + 1):
                grid[SOUTH_WALL_ROW][cx] = "."

    # Elevator shaft: a walled block with the door portal and the car cell.
    x0, z0, x1, z1 = ELEV_SHAFT
    for cz in range(z0, z1 + 1):
        for cx in range(x0, x1 + 1):
            grid[cz][cx] = "#"
    grid[ELEV_DOOR[1]][ELEV_DOOR[0]] = "E"
    grid[ELEV_CAR[1]][ELEV_CAR[0]] = "."

    if floor in (0, 1):
        grid[STAIRS_01[1]][STAIRS_01[0]] = "S"
    if floor in (1, 2):
        grid[STAIRS_12[1]][STAIRS_12[0]] = "S"
    return grid


def _rect_for(placement, side, cx0, cx1, z0, z1, taken):
    """Resolve a placement hint to a concrete cell rect inside the room."""
    if isinstance(placement, tuple):
        return placement
    kind, dims = placement[:3], placement[3:]
    depth, width = (int(v) for v in dims.split("x"))
    mid_x = (cx0 + cx1) // 2
    if kind == "top":
        # Against the room's outer wall (away from the corridor).
        if side == "N":
            rect = (cx0 + 2, z0, cx0 + 1 + width, z0 + depth - 1)
        else:
            rect = (cx0 + 2, z1 - depth + 1, cx0 + 1 + width, z1)
    else:  # "mid": free-standing near the room centre
        zc = (z0 + z1) // 2
        rect = (mid_x - width // 2, zc - depth // 2,
                mid_x - width // 2 + width - 1, zc - depth // 2 + depth - 1)
    # Nudge east until clear of previously placed furniture.
    while any(not (rect[2] < t[0] or rect[0] > t[2] or rect[3] < t[1] or rect[1] > t[3])
              for t in taken):
        rect = (rect[0] + width + 2, rect[1], rect[2] + width + 2, rect[3])
    return rect


def _anchor_cells(room_rect, blocked_cells):
    """Deterministic spread of free standing spots inside a room."""
    cx0, cz0, cx1, cz1 = room_rect
    fractions = [(0.5, 0.5), (0.25, 0.35), (0.75, 0.4), (0.3, 0.7), (0.7, 0.72), (0.5, 0.28)]
    anchors = []
    for fx, fz in fractions:
        cx = cx0 + int(round(fx * (cx1 - cx0)))
        cz = cz0 + int(round(fz * (cz1 - cz0)))
        cell = (cx, cz)
        if cell in blocked_cells or cell in anchors:
            found = None
            for radius in range(1, 8):
                for dz in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        cand = (cx + dx, cz + dz)
                        if (cx0 <= cand[0] <= cx1 and cz0 <= cand[1] <= cz1
                                and cand not in blocked_cells and cand not in anchors):
                            found = cand
                            break
                    if found:
                        break
                if found:
                    break
            cell = found
        if cell:
            anchors.append(cell)
    return anchors[:5]


def _surface_points(rect, count):
    """Deterministic sample points on a receptacle surface (cell coords)."""
    cx0, cz0, cx1, cz1 = rect
    fractions = [(0.3, 0.4), (0.65, 0.6), (0.45, 0.25), (0.7, 0.3), (0.25, 0.7)]
    pts = []
    for fx, fz in fractions[:count]:
        pts.append((cx0 + fx * (cx1 - cx0 + 1), cz0 + fz * (cz1 - cz0 + 1)))
    return pts


def _to_meters(cellx, cellz, floor, height):
    return [ORIGIN[0] + cellx * CELL, floor * FLOOR_HEIGHT + height, ORIGIN[2] + cellz * CELL]


def build_default_world_config() -> dict:
    grids = {f: _build_grid(f) for f in range(3)}

    rooms_cfg = []
    receptacles_cfg = []
    furniture_by_floor = {0: set(), 1: set(), 2: set()}
    rect_by_receptacle = {}

    for rid, name, cat, floor, side, cx0, cx1, _door in _ROOMS:
        z0, z1 = _room_band(side)
        taken = []
        for rec in [r for r in _RECEPTACLES if r[1] == rid]:
            rec_id, _room, rec_name, descriptor, height, placement = rec
            rect = _rect_for(placement, side, cx0, cx1, z0, z1, taken)
            taken.append(rect)
            rect_by_receptacle[rec_id] = (rect, floor, height)
            for cz in range(rect[1], rect[3] + 1):
                for cx in range(rect[0], rect[2] + 1):
                    furniture_by_floor[floor].add((cx, cz))
            receptacles_cfg.append({
                "id": rec_id,
                "name": rec_name,
                "descriptor": descriptor,
                "room": rid,
                "rect": list(rect),
                "surface_height": height,
            })

    for rid, name, cat, floor, side, cx0, cx1, _door in _ROOMS:
        z0, z1 = _room_band(side)
        blocked = set(furniture_by_floor[floor])
        grid = grids[floor]
        for cz in range(z0, z1 + 1):
            for cx in range(cx0, cx1 + 1):
                if grid[cz][cx] != ".":
                    blocked.add((cx, cz))
        anchor_cells = _anchor_cells((cx0, z0, cx1, z1), blocked)
        anchors = [[ORIGIN[0] + (cx + 0.5) * CELL, floor * FLOOR_HEIGHT,
                    ORIGIN[2] + (cz + 0.5) * CELL] for cx, cz in anchor_cells]
        rooms_cfg.append({
            "id": rid,
            "name": name,
            "floor": floor,
            "category": cat,
            "rects": [[cx0, z0, cx1, z1]],
            "anchors": anchors,
        })

    item_types_cfg = []
    items_cfg = []
    instance_counter = {}
    for type_id, noun, descriptors, extra, prefix, homes in _ITEM_TYPES:
        item_types_cfg.append({
            "id": type_id,
            "noun": noun,
            "descriptors": descriptors,
            "phrase_descriptors": descriptors + extra,
            "instance_prefix": prefix,
            "graspable": True,
        })
        for home in homes:
            rect, floor, height = rect_by_receptacle[home]
            k = instance_counter.get(type_id, 0)
            instance_counter[type_id] = k + 1
            used_before = sum(1 for it in items_cfg if it["holder"] == home)
            px, pz = _surface_points(rect, 5)[used_before % 5]
            items_cfg.append({
                "name": f"{prefix}_{k + 1}",
                "type": type_id,
                "holder": home,
                "pos": _to_meters(px, pz, floor, height),
            })

    # The blue water bottle on the kitchen dining table is the anchor fixture
    # used throughout the test suite; give it a stable, hand-picked spot.
    for it in items_cfg:
        if it["name"] == "WaterBottle_Blue_1":
            it["pos"] = _to_meters((74 + 79 + 1) / 2 - 0.1, (31 + 34 + 1) / 2 - 0.4, 0, 0.76)

    schedules = _build_schedules()
    npcs_cfg = []
    for npc_id, name, occupation, persona, room_number, work_room, appearance, desc in _NPCS:
        office_name = next(n for rid, n, *_ in _ROOMS if rid == work_room)
        npcs_cfg.append({
            "id": npc_id,
            "name": name,
            "occupation": occupation,
            "persona": persona,
            "room_number": room_number,
            "office_room": office_name,
            "appearance": appearance,
            "description": desc,
            "schedule": schedules[npc_id],
        })

    portals_cfg = [
        {"id": "stairs-0-1", "kind": "stairs",
         "a": [0, STAIRS_01[0], STAIRS_01[1]], "b": [1, STAIRS_01[0], STAIRS_01[1]],
         "traversal_ticks": 40},
        {"id": "stairs-1-2", "kind": "stairs",
         "a": [1, STAIRS_12[0], STAIRS_12[1]], "b": [2, STAIRS_12[0], STAIRS_12[1]],
         "traversal_ticks": 40},
        {"id": "elevator-door-0-1", "kind": "elevator_door",
         "a": [0, ELEV_DOOR[0], ELEV_DOOR[1]], "b": [1, ELEV_DOOR[0], ELEV_DOOR[1]],
         "traversal_ticks": 0},
        {"id": "elevator-door-1-2", "kind": "elevator_door",
         "a": [1, ELEV_DOOR[0], ELEV_DOOR[1]], "b": [2, ELEV_DOOR[0], ELEV_DOOR[1]],
         "traversal_ticks": 0},
    ]

    return {
        "schema_version": 1,
        "name": "station-default",
        "cell_size": CELL,
        "floor_height": FLOOR_HEIGHT,
        "tick_dt": TICK_DT,
        "origin": list(ORIGIN),
        "start_time": "2025-02-11T06:30:00",
        "counts": {"rooms": 23, "npcs": 10, "item_types": 47},
        "floors": [{"index": f, "rows": ["".join(row) for row in grids[f]]} for f in range(3)],
        "portals": portals_cfg,
        "elevator": {
            "door_cells": {str(f): list(ELEV_DOOR) for f in range(3)},
            "car_cells": {str(f): list(ELEV_CAR) for f in range(3)},
            "initial_floor": 0,
        },
        "rooms": rooms_cfg,
        "receptacles": receptacles_cfg,
        "item_types": item_types_cfg,
        "items": items_cfg,
        "npcs": npcs_cfg,
        "robot": {
            "spawn": [0.0, 0.0, 0.0],
            "speed": 1.0,
            "fov_deg": 90.0,
            "view_range": 10.0,
            "grasp_range": 1.2,
        },
        "npc_speed": 1.2,
        "elevator_timing": {"door_ticks": 30, "transit_ticks_per_floor": 50},
    }


def dump_default_world(path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(build_default_world_config(), fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":  # pragma: no cover
    import sys

    dump_default_world(sys.argv[1] if len(sys.argv) > 1 else "default_world.json")
