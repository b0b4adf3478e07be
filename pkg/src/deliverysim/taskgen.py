"""Delivery task generation: need sampling, directives, validation, datasets.

Tasks are sampled from the scheduled life of the characters: at a random time
of day some character's active schedule entry demands an item type, the
nearest instance of that type (not already within arm's reach of them) is
chosen, and the pair is rendered into two natural-language directives — a
simple first-person one and a detailed one naming the recipient and their
appearance.  Every record is validated for schema shape, referential
integrity, a >3 m object/character separation, and solvability before it is
written.
"""

from __future__ import annotations

import json
import logging
import os
import re
import random
from dataclasses import dataclass
from datetime import datetime
from importlib import resources

from .engine import (find_delivery_cell, find_grasp_cell, reachable_cells,
                     scheduled_npc_placement)
from .geometry import Vec3, distance3d
from .world import FREE, WorldState, load_world

logger = logging.getLogger(__name__)

MIN_SEPARATION_M = 3.0
TASK_FIELDS = (
    "task_id", "npc_name", "npc_id", "time", "npc_action", "npc_position",
    "target_object_name", "target_object_type", "target_object_pos",
    "directive", "npc_description",
)
_POS_FIELDS = ("x", "y", "z")


class GenerationError(RuntimeError):
    """The world cannot satisfy the requested dataset (never degraded silently)."""


class NoActiveNeedError(LookupError):
    """No character demands anything at the sampled time."""


@dataclass(frozen=True)
class Corpus:
    fetch_verbs: tuple[str, ...]
    deliver_verbs: tuple[str, ...]
    simple_templates: tuple[str, ...]
    detailed_templates: tuple[str, ...]


def load_corpus(source: str | None = None) -> Corpus:
    if source is None:
        raw = json.loads(resources.files("deliverysim.data").joinpath("corpus.json").read_text())
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    return Corpus(
        fetch_verbs=tuple(raw["fetch_verbs"]),
        deliver_verbs=tuple(raw["deliver_verbs"]),
        simple_templates=tuple(raw["simple_templates"]),
        detailed_templates=tuple(raw["detailed_templates"]),
    )


@dataclass(frozen=True)
class GroundTruth:
    obj: str
    recep_obj: str
    room_obj: str
    npc: str
    room_npc: str

    def to_wire(self) -> dict:
        return {"obj": self.obj, "recep_obj": self.recep_obj, "room_obj": self.room_obj,
                "npc": self.npc, "room_npc": self.room_npc}


@dataclass(frozen=True)
class NeedEvent:
    npc_id: int
    npc_action: str
    npc_pos: Vec3
    need_type: str
    item_name: str
    item_pos: Vec3
    receptacle_id: str | None
    room_obj_id: str
    room_npc_id: str


def decamel(type_id: str) -> str:
    """CamelCase type id to a lowercase phrase: WaterBottleBlue -> water bottle blue."""
    return " ".join(w.lower() for w in re.findall(r"[A-Z][a-z]*|\d+", type_id))


def build_synonym_map(world: WorldState) -> dict[str, str]:
    """Normalized variant -> canonical normalized phrase, for parsing credit.

    Registers each item type's de-camel-cased id and its alternate descriptor
    phrases, and each receptacle's descriptor-qualified name.  Numbered rooms
    get no entries: 'office' never merges with 'office 1'.
    """
    from .evaluation import normalize_phrase

    synonyms: dict[str, str] = {}
    for itype in world.item_types.values():
        canonical = normalize_phrase(f"{itype.descriptors[0]} {itype.noun}")
        for variant in (decamel(itype.type_id), itype.type_id, *(
                f"{d} {itype.noun}" for d in itype.phrase_descriptors)):
            norm = normalize_phrase(variant)
            if norm != canonical:
                synonyms[norm] = canonical
    for rec in world.receptacles.values():
        if rec.descriptor:
            norm = normalize_phrase(f"{rec.descriptor} {rec.name}")
            canonical = normalize_phrase(rec.name)
            if norm != canonical:
                synonyms[norm] = canonical
    return synonyms


# ---------------------------------------------------------------------------
# Need sampling


def sample_need(world: WorldState, rng: random.Random) -> NeedEvent:
    """Pick uniformly among the active (character, demand) pairs right now.

    The chosen item instance is the nearest one of the demanded type that is
    not already within 3 m of the character; pairs whose instances are all
    nearby are skipped entirely.
    """
    tod = world.clock.time_of_day_s
    candidates = []
    for npc in world.npcs_sorted():
        hit = npc.profile.entry_at(tod)
        if hit is None:
            continue
        _idx, entry = hit
        if entry.need is None:
            continue
        instances = sorted(
            (it for it in world.items.values() if it.type_id == entry.need),
            key=lambda it: (distance3d(it.pos, npc.pos), it.name))
        instances = [it for it in instances if distance3d(it.pos, npc.pos) > MIN_SEPARATION_M]
        if not instances:
            continue
        candidates.append((npc, entry, instances[0]))
    if not candidates:
        raise NoActiveNeedError(f"no active needs at {tod}s")
    npc, entry, item = candidates[rng.randrange(len(candidates))]
    rec = world.receptacles.get(item.holder)
    room_obj = rec.room_id if rec else _room_id_of(world, item.pos)
    return NeedEvent(
        npc_id=npc.profile.npc_id,
        npc_action=entry.action,
        npc_pos=npc.pos,
        need_type=entry.need,
        item_name=item.name,
        item_pos=item.pos,
        receptacle_id=rec.receptacle_id if rec else None,
        room_obj_id=room_obj,
        room_npc_id=entry.room_id,
    )


def _room_id_of(world: WorldState, pos: Vec3) -> str:
    room = world.room_of(pos)
    if room is None:
        raise GenerationError(f"item at ({pos.x:.2f}, {pos.z:.2f}) is outside every room")
    return room.room_id


# ---------------------------------------------------------------------------
# Directive rendering


def ground_truth_for(world: WorldState, need: NeedEvent) -> GroundTruth:
    itype = world.item_types[need.need_type]
    rec_name = (world.receptacles[need.receptacle_id].name
                if need.receptacle_id else "floor")
    return GroundTruth(
        obj=f"{itype.descriptors[0]} {itype.noun}",
        recep_obj=rec_name,
        room_obj=world.rooms[need.room_obj_id].name,
        npc=world.npcs[need.npc_id].profile.name,
        room_npc=world.rooms[need.room_npc_id].name,
    )


def render_with_choices(world: WorldState, need: NeedEvent, corpus: Corpus,
                        choices: dict) -> tuple[str, str]:
    """Deterministic slot fill; ``choices`` indexes into the corpus lists."""
    itype = world.item_types[need.need_type]
    profile = world.npcs[need.npc_id].profile
    rec = world.receptacles[need.receptacle_id] if need.receptacle_id else None
    recep_phrase = (f"{rec.descriptor} {rec.name}".strip() if rec else "floor")
    verb = corpus.fetch_verbs[choices.get("verb", 0)]
    dverb = corpus.deliver_verbs[choices.get("dverb", 0)]
    detailed_descriptor = itype.phrase_descriptors[
        choices.get("descriptor", 0) % len(itype.phrase_descriptors)]
    appearance = f"{profile.persona} in the {profile.appearance[0]}"
    if len(profile.appearance) > 1:
        appearance += f" with {profile.appearance[1]}"
    slots = {
        "verb": verb,
        "lverb": verb.lower(),
        "dverb": dverb,
        "obj": f"{itype.descriptors[0]} {itype.noun}",
        "recep": recep_phrase,
        "room_obj": world.rooms[need.room_obj_id].name,
        "room_npc": world.rooms[need.room_npc_id].name,
        "npc": profile.name,
        "appearance": appearance,
    }
    simple = corpus.simple_templates[choices.get("simple_template", 0)].format(**slots)
    slots_detailed = dict(slots, obj=f"{detailed_descriptor} {itype.noun}",
                          verb=corpus.fetch_verbs[choices.get("verb2", choices.get("verb", 0))],
                          lverb=corpus.fetch_verbs[choices.get("verb2", choices.get("verb", 0))].lower(),
                          dverb=corpus.deliver_verbs[choices.get("dverb2", choices.get("dverb", 0))])
    detailed = corpus.detailed_templates[choices.get("detailed_template", 0)].format(**slots_detailed)
    return simple, detailed


def render_directives(world: WorldState, need: NeedEvent, corpus: Corpus,
                      rng: random.Random) -> tuple[str, str]:
    itype = world.item_types[need.need_type]
    choices = {
        "simple_template": rng.randrange(len(corpus.simple_templates)),
        "detailed_template": rng.randrange(len(corpus.detailed_templates)),
        "verb": rng.randrange(len(corpus.fetch_verbs)),
        "verb2": rng.randrange(len(corpus.fetch_verbs)),
        "dverb": rng.randrange(len(corpus.deliver_verbs)),
        "dverb2": rng.randrange(len(corpus.deliver_verbs)),
        "descriptor": rng.randrange(len(itype.phrase_descriptors)),
    }
    return render_with_choices(world, need, corpus, choices)


# ---------------------------------------------------------------------------
# Optional directive refinement


def refine_directive(text: str, client=None, truth: GroundTruth | None = None,
                     synonyms: dict[str, str] | None = None) -> str:
    """Pass a directive through an optional rewriting client, guarded.

    The rewrite is accepted only when every ground-truth phrase that appeared
    in the original (canonically or as a registered synonym) still appears in
    the rewrite; otherwise, or on any client failure, the input is returned.
    """
    if client is None:
        return text
    try:
        rewritten = client(text)
    except Exception as exc:
        logger.warning("refinement client failed (%s); keeping the original", exc)
        return text
    if not isinstance(rewritten, str) or not rewritten.strip():
        return text
    if truth is not None and not _refinement_keeps_truth(text, rewritten, truth, synonyms or {}):
        logger.info("refinement dropped a ground-truth phrase; keeping the original")
        return text
    return rewritten


def _variants_of(canonical_norm: str, synonyms: dict[str, str]) -> list[str]:
    variants = [canonical_norm]
    variants.extend(v for v, c in synonyms.items() if c == canonical_norm)
    return variants


def _refinement_keeps_truth(original: str, rewritten: str, truth: GroundTruth,
                            synonyms: dict[str, str]) -> bool:
    from .evaluation import normalize_phrase

    orig_norm = " " + normalize_phrase(original) + " "
    new_norm = " " + normalize_phrase(rewritten) + " "
    for value in (truth.obj, truth.recep_obj, truth.room_obj, truth.npc, truth.room_npc):
        variants = _variants_of(normalize_phrase(value), synonyms)
        present_before = [v for v in variants if f" {v} " in orig_norm]
        if not present_before:
            continue  # the original never named it (e.g. "me" directives)
        if not any(f" {v} " in new_norm for v in present_before + variants):
            return False
    return True


# ---------------------------------------------------------------------------
# Record validation


def _check_schema(record: dict) -> list[str]:
    violations = []
    keys = set(record)
    for f in TASK_FIELDS:
        if f not in keys:
            violations.append(f"missing field '{f}'")
    for extra in sorted(keys - set(TASK_FIELDS)):
        violations.append(f"unexpected field '{extra}'")
    if violations:
        return violations
    for f, typ in (("task_id", str), ("npc_name", str), ("time", str),
                   ("npc_action", str), ("target_object_name", str),
                   ("target_object_type", str), ("npc_description", str)):
        if not isinstance(record[f], typ):
            violations.append(f"field '{f}' must be a string")
    if not isinstance(record["npc_id"], int) or isinstance(record["npc_id"], bool):
        violations.append("field 'npc_id' must be an integer")
    for f in ("npc_position", "target_object_pos"):
        pos = record[f]
        if not isinstance(pos, dict) or set(pos) != set(_POS_FIELDS):
            violations.append(f"field '{f}' must be an object with exactly x, y, z")
        elif not all(isinstance(pos[k], (int, float)) and not isinstance(pos[k], bool)
                     for k in _POS_FIELDS):
            violations.append(f"field '{f}' components must be numbers")
    d = record["directive"]
    if not (isinstance(d, list) and len(d) == 2
            and all(isinstance(s, str) and s.strip() for s in d)):
        violations.append("directive.count: must be exactly 2 non-empty strings")
    try:
        t = datetime.fromisoformat(record["time"])
        if "T" not in record["time"]:
            violations.append("time: must use the ISO-8601 'T' separator")
        del t
    except (TypeError, ValueError):
        violations.append("time: not an ISO-8601 datetime")
    return violations


def validate_record(record: dict, world: WorldState, reach=None) -> list[str]:
    """All screening violations for one task record (empty list means ok)."""
    violations = _check_schema(record)
    if violations:
        return violations

    npc_state = world.npcs.get(record["npc_id"])
    if npc_state is None:
        return [f"npc_id: unknown character {record['npc_id']}"]
    profile = npc_state.profile
    if record["npc_name"] != profile.name:
        violations.append(f"npc_name: '{record['npc_name']}' is not character {profile.npc_id}")
    if record["npc_description"] != profile.description:
        violations.append("npc_description: does not match the character profile")

    item = world.items.get(record["target_object_name"])
    if item is None:
        violations.append(f"target_object_name: unknown instance '{record['target_object_name']}'")
    elif item.type_id != record["target_object_type"]:
        violations.append(
            f"target_object_type: instance is {item.type_id}, not {record['target_object_type']}")

    if violations:
        return violations

    when = datetime.fromisoformat(record["time"])
    tod = when.hour * 3600 + when.minute * 60 + when.second
    hit = profile.entry_at(tod)

    npc_pos = Vec3(record["npc_position"]["x"], record["npc_position"]["y"],
                   record["npc_position"]["z"])
    obj_pos = Vec3(record["target_object_pos"]["x"], record["target_object_pos"]["y"],
                   record["target_object_pos"]["z"])

    npc_grid = world.grid_of(npc_pos)
    cell = npc_grid.cell_of(npc_pos)
    if not npc_grid.in_bounds(*cell) or npc_grid.cells[cell] != FREE:
        violations.append("npc_position: not on a free cell")
    elif hit is not None:
        _idx, entry = hit
        room = world.rooms[entry.room_id]
        if room.floor_index != npc_grid.floor_index or not room.contains_cell(*cell):
            violations.append(
                f"npc_position: outside the scheduled room '{entry.room_id}' at {record['time']}")
        if record["npc_action"] != entry.action:
            violations.append(
                f"npc_action: '{record['npc_action']}' but the schedule says '{entry.action}'")
    else:
        violations.append("time: the character has no schedule entry at this time")

    obj_grid = world.grid_of(obj_pos)
    ocell = obj_grid.cell_of(obj_pos)
    if not obj_grid.in_bounds(*ocell):
        violations.append("target_object_pos: outside the map")
    else:
        rec = world.receptacle_under(obj_pos)
        if rec is not None:
            surface = world.rooms[rec.room_id].floor_index * world.floor_height + rec.surface_height
            if abs(obj_pos.y - surface) > 0.05:
                violations.append(
                    f"target_object_pos: height {obj_pos.y:.3f} off the '{rec.receptacle_id}' surface")
        elif obj_grid.cells[ocell] != FREE:
            violations.append("target_object_pos: inside an obstacle and not on any surface")

    separation = distance3d(npc_pos, obj_pos)
    if separation <= MIN_SEPARATION_M:
        violations.append(
            f"separation: object starts {separation:.2f} m from the character (needs > 3 m)")

    d0, d1 = record["directive"]
    if " me" not in f" {d0}":
        violations.append("directive[0]: must be addressed to 'me'")
    if profile.name not in d1:
        violations.append("directive[1]: does not mention the recipient's name")
    elif not any(phrase in d1 for phrase in profile.appearance):
        violations.append("directive[1]: does not mention any appearance phrase")

    if violations:
        return violations

    # Solvability: the object must be graspable from a reachable cell and the
    # character approachable to within delivery range.
    if reach is None:
        reach = reachable_cells(world)
    npc_positions = [p for p, _f, _a, _r in scheduled_npc_placement(world, tod).values()]
    npc_positions.append(npc_pos)
    if find_grasp_cell(world, obj_pos, reach, npc_positions) is None:
        violations.append("solvability: no reachable cell within grasping range of the object")
    if find_delivery_cell(world, npc_pos, reach, npc_positions) is None:
        violations.append("solvability: no reachable delivery spot near the character")
    return violations


# ---------------------------------------------------------------------------
# Dataset generation


def _time_to_task_id_part(time_iso: str) -> str:
    return time_iso.replace("-", "_").replace(":", "_")


def _sample_surface_point(world: WorldState, rec, rng: random.Random) -> Vec3:
    room = world.rooms[rec.room_id]
    grid = world.grids[room.floor_index]
    x0m = grid.origin.x + rec.rect[0] * grid.cell_size + 0.07
    x1m = grid.origin.x + (rec.rect[2] + 1) * grid.cell_size - 0.07
    z0m = grid.origin.z + rec.rect[1] * grid.cell_size + 0.07
    z1m = grid.origin.z + (rec.rect[3] + 1) * grid.cell_size - 0.07
    return Vec3(rng.uniform(x0m, x1m),
                room.floor_index * world.floor_height + rec.surface_height,
                rng.uniform(z0m, z1m))


def generate_dataset(world_source, split_spec: dict[str, int], seed: int,
                     out_dir: str, corpus: Corpus | None = None,
                     refine_client=None, date: str = "2025-02-11") -> dict:
    """Write task datasets (and annotations for non-test splits) to out_dir.

    Regeneration with the same arguments is byte-identical.  Ground-truth
    annotation files are written for every split except 'test'.  Returns the
    manifest, which is also written to ``manifest.json``.
    """
    world = load_world(world_source)
    corpus = corpus or load_corpus()
    reach = reachable_cells(world)
    synonyms = build_synonym_map(world)
    home_pos = {name: item.pos for name, item in world.items.items()}
    os.makedirs(out_dir, exist_ok=True)

    manifest: dict = {"schema_version": 1, "seed": seed, "splits": {}}
    for split in sorted(split_spec):
        count = int(split_spec[split])
        rng = random.Random(f"{seed}/{split}")
        records = []
        truths = {}
        scenes = set()
        categories = set()
        for index in range(count):
            built = None
            for _attempt in range(80):
                built = _try_build_task(world, corpus, rng, reach, synonyms,
                                        refine_client, date, index, home_pos)
                if built is not None:
                    break
            if built is None:
                raise GenerationError(
                    f"split '{split}': could not build task {index + 1} after 80 attempts; "
                    f"the world is too small for the requested diversity")
            record, truth, scene = built
            records.append(record)
            truths[record["task_id"]] = truth.to_wire()
            scenes.add(scene)
            categories.add(record["target_object_type"])

        tasks_file = os.path.join(out_dir, f"{split}_tasks.json")
        with open(tasks_file, "w", encoding="utf-8") as fh:
            json.dump(records, fh, indent=1, ensure_ascii=False)
            fh.write("\n")
        annotations_file = None
        if split != "test":
            annotations_file = os.path.join(out_dir, f"{split}_annotations.json")
            with open(annotations_file, "w", encoding="utf-8") as fh:
                json.dump({"schema_version": 1, "split": split,
                           "synonyms": synonyms, "tasks": truths},
                          fh, indent=1, ensure_ascii=False, sort_keys=True)
                fh.write("\n")
        manifest["splits"][split] = {
            "tasks": len(records),
            "instructions": 2 * len(records),
            "scenes": sorted(scenes),
            "scene_count": len(scenes),
            "object_categories": sorted(categories),
            "object_category_count": len(categories),
            "tasks_file": os.path.basename(tasks_file),
            "annotations_file": os.path.basename(annotations_file) if annotations_file else None,
        }
    manifest["total_instructions"] = sum(
        s["instructions"] for s in manifest["splits"].values())
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def _try_build_task(world, corpus, rng, reach, synonyms, refine_client,
                    date, index, home_pos):
    minute = rng.randrange(7 * 60, 22 * 60)
    second = rng.randrange(60)
    tod = minute * 60 + second
    time_iso = f"{date}T{minute // 60:02d}:{minute % 60:02d}:{second:02d}"

    placement = scheduled_npc_placement(world, tod)
    for nid, (anchor, floor, action, _room) in placement.items():
        npc = world.npcs[nid]
        jx = (rng.random() - 0.5) * 0.2
        jz = (rng.random() - 0.5) * 0.2
        npc.pos = Vec3(anchor.x + jx, anchor.y, anchor.z + jz)
        npc.floor = floor
        npc.action = action
    world.clock.start = datetime.fromisoformat(time_iso)
    world.clock.tick_index = 0

    try:
        need = sample_need(world, rng)
    except NoActiveNeedError:
        return None

    item = world.items[need.item_name]
    try:
        if need.receptacle_id is not None:
            rec = world.receptacles[need.receptacle_id]
            item.pos = _sample_surface_point(world, rec, rng)
        npc_state = world.npcs[need.npc_id]
        if distance3d(item.pos, npc_state.pos) <= MIN_SEPARATION_M:
            return None

        simple, detailed = render_directives(world, need, corpus, rng)
        truth = ground_truth_for(world, need)
        if refine_client is not None:
            simple = refine_directive(simple, refine_client, truth, synonyms)
            detailed = refine_directive(detailed, refine_client, truth, synonyms)

        type_index = sorted(world.item_types).index(need.need_type) + 1
        instance_index = int(need.item_name.rsplit("_", 1)[-1])
        record = {
            "task_id": (f"{index + 1}_{_time_to_task_id_part(time_iso)}_"
                        f"{need.npc_id}_{type_index}_{instance_index}"),
            "npc_name": world.npcs[need.npc_id].profile.name,
            "npc_id": need.npc_id,
            "time": time_iso,
            "npc_action": need.npc_action,
            "npc_position": {"x": npc_state.pos.x, "y": npc_state.pos.y, "z": npc_state.pos.z},
            "target_object_name": need.item_name,
            "target_object_type": need.need_type,
            "target_object_pos": {"x": item.pos.x, "y": item.pos.y, "z": item.pos.z},
            "directive": [simple, detailed],
            "npc_description": world.npcs[need.npc_id].profile.description,
        }
        if validate_record(record, world, reach=reach):
            return None
        return record, truth, need.room_npc_id
    finally:
        item.pos = home_pos[item.name]
