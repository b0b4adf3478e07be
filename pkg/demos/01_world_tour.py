"""Tour of the bundled world: floors, rooms, characters, items, geometry.

Run:  python3 demos/01_world_tour.py
"""

from deliverysim import Vec3, default_world, distance3d

world = default_world()

print(f"world '{world.name}': {len(world.grids)} floors, {len(world.rooms)} rooms, "
      f"{len(world.npcs)} characters, {len(world.item_types)} item types, "
      f"{len(world.items)} item instances\n")

for floor in range(3):
    names = sorted(r.name for r in world.rooms.values() if r.floor_index == floor)
    print(f"floor {floor}: {', '.join(names) or 'open space'}")

print("\ncharacters and their day (first three entries):")
for npc in world.npcs_sorted():
    p = npc.profile
    head = ", ".join(
        f"{e.start_s // 3600:02d}:{e.start_s % 3600 // 60:02d} {world.rooms[e.room_id].name}"
        for e in p.schedule[:3])
    print(f"  {p.npc_id} {p.name:7s} ({p.occupation}) - {head}, ...")

print("\na slice of the floor-0 map around the kitchen "
      "('#' obstacle, '.' free, 'E' elevator, 'S' stairs):")
art = world.ascii_floor(0).split("\n")
for row in art[28:45]:
    print("  " + row[60:100])

kitchen = world.rooms["kitchen"]
table = world.receptacles["kitchen.dining_table"]
bottle = world.items["WaterBottle_Blue_1"]
print(f"\nthe {table.descriptor} {table.name} holds {bottle.name} at "
      f"({bottle.pos.x:.2f}, {bottle.pos.y:.2f}, {bottle.pos.z:.2f})")

imani = world.npcs[1]
print(f"{imani.profile.name} starts in {world.rooms[imani.profile.schedule[0].room_id].name}; "
      f"her description reads:\n  {imani.profile.description!r}")

a = Vec3(-16.0, 0.0, -8.0)
b = Vec3(-16.0, 0.0, -2.0)
print(f"\nline of sight across the kitchen wall {a} -> {b}: {world.line_of_sight(a, b)}")
print(f"distance between them: {distance3d(a, b):.2f} m")
