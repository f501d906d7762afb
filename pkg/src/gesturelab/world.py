"""Discrete table-top world: scene types, random scene sampling, context features.

The world is a 4x4x4 cell grid. Objects are cups, drawers, and cubes;
cups and cubes can be stacked on cubes or put inside drawers, drawers sit
on the ground. A one-slot gripper with a discrete end-effector position
completes the state.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import PlacementExhausted, UnknownObject
from .validation import Seed, as_rng, check_vector

GRID = 4
MAX_OBJECTS = 7
#: Maximum consecutive placement retries before giving up on a scene draw.
PLACEMENT_RETRY_CAP = 100
#: Distance reported for empty object slots; larger than the grid diagonal.
ABSENT_SLOT_DISTANCE = 10.0
#: Half-width of the uniform pose perturbation, in cell units.
JITTER = 0.2


class ObjectType(str, enum.Enum):
    CUP = "cup"
    DRAWER = "drawer"
    CUBE = "cube"


#: Object types by slot; a scene with n objects uses the first n entries.
LEADING_TYPES = (
    ObjectType.CUP,
    ObjectType.DRAWER,
    ObjectType.CUBE,
    ObjectType.CUP,
    ObjectType.DRAWER,
    ObjectType.CUBE,
    ObjectType.CUP,
)


@dataclass(frozen=True, order=True)
class GridPos:
    x: int
    y: int
    z: int

    def in_grid(self) -> bool:
        return all(0 <= c < GRID for c in (self.x, self.y, self.z))

    def shifted(self, dx: int = 0, dy: int = 0, dz: int = 0) -> "GridPos":
        return GridPos(self.x + dx, self.y + dy, self.z + dz)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class SceneObject:
    id: int
    type: ObjectType
    pos: GridPos
    jitter: tuple[float, float, float] = (0.0, 0.0, 0.0)
    #: drawer: open=1/closed=0; cup: full=1/empty=0; cube: always 0.
    state: int = 0
    on_top_of: int | None = None
    inside_of: int | None = None

    def center(self) -> np.ndarray:
        return self.pos.as_array() + np.asarray(self.jitter, dtype=float)


@dataclass(frozen=True)
class GripperState:
    holding: int | None = None
    eef_pos: GridPos = GridPos(0, 0, 0)


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...] = ()
    gripper: GripperState = GripperState()

    def obj(self, object_id: int) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise UnknownObject(object_id)

    def has(self, object_id: int) -> bool:
        return any(o.id == object_id for o in self.objects)

    def object_on_top_of(self, object_id: int) -> SceneObject | None:
        """The object resting directly on ``object_id``, if any."""
        for o in self.objects:
            if o.on_top_of == object_id:
                return o
        return None

    def contents(self, drawer_id: int) -> tuple[SceneObject, ...]:
        return tuple(o for o in self.objects if o.inside_of == drawer_id)

    def is_free_standing(self, o: SceneObject) -> bool:
        return (
            o.on_top_of is None
            and o.inside_of is None
            and self.gripper.holding != o.id
        )

    def with_object(self, updated: SceneObject) -> "Scene":
        objs = tuple(updated if o.id == updated.id else o for o in self.objects)
        return dataclasses.replace(self, objects=objs)

    def with_gripper(self, gripper: GripperState) -> "Scene":
        return dataclasses.replace(self, gripper=gripper)

    def to_dict(self) -> dict:
        return {
            "objects": [
                {
                    "slot": o.id,
                    "type": o.type.value,
                    "pos": [o.pos.x, o.pos.y, o.pos.z],
                    "jitter": list(o.jitter),
                    "state": o.state,
                    "on": -1 if o.on_top_of is None else o.on_top_of,
                    "in": -1 if o.inside_of is None else o.inside_of,
                }
                for o in self.objects
            ],
            "gripper": {
                "holding": -1 if self.gripper.holding is None else self.gripper.holding,
                "eef": [self.gripper.eef_pos.x, self.gripper.eef_pos.y, self.gripper.eef_pos.z],
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "Scene":
        objects = tuple(
            SceneObject(
                id=int(rec["slot"]),
                type=ObjectType(rec["type"]),
                pos=GridPos(*(int(c) for c in rec["pos"])),
                jitter=tuple(float(c) for c in rec["jitter"]),
                state=int(rec["state"]),
                on_top_of=None if rec["on"] == -1 else int(rec["on"]),
                inside_of=None if rec["in"] == -1 else int(rec["in"]),
            )
            for rec in d["objects"]
        )
        g = d["gripper"]
        gripper = GripperState(
            holding=None if g["holding"] == -1 else int(g["holding"]),
            eef_pos=GridPos(*(int(c) for c in g["eef"])),
        )
        return Scene(objects=objects, gripper=gripper)


def sample_scene(seed: Seed | None, n: int | None = None) -> Scene:
    """Sample a random valid scene with ``n`` objects (1..7, random if absent).

    Object types follow the leading-type vector by slot. Drawers are placed
    first on free ground cells, then cubes, then cups; a cube or cup landing
    in a column already topped by a cube is stacked on it, other collisions
    re-draw the landing cell. Poses get uniform jitter, object attributes and
    the gripper are randomized last. Deterministic in (seed, n).
    """
    rng = as_rng(seed)
    if n is None:
        n = int(rng.integers(1, MAX_OBJECTS + 1))
    if not 1 <= n <= MAX_OBJECTS:
        raise ValueError(f"n must be in 1..{MAX_OBJECTS}, got {n}")

    types = LEADING_TYPES[:n]
    placed: dict[int, SceneObject] = {}
    # Highest object in each (x, y) column, placement-time view.
    column_top: dict[tuple[int, int], SceneObject] = {}

    def land(slot: int, otype: ObjectType) -> None:
        failures = 0
        while True:
            x, y = (int(v) for v in rng.integers(0, GRID, size=2))
            top = column_top.get((x, y))
            if otype is ObjectType.DRAWER:
                if top is None:
                    obj = SceneObject(id=slot, type=otype, pos=GridPos(x, y, 0))
                    break
            else:
                if top is None:
                    obj = SceneObject(id=slot, type=otype, pos=GridPos(x, y, 0))
                    break
                if top.type is ObjectType.CUBE and top.pos.z + 1 < GRID:
                    obj = SceneObject(
                        id=slot,
                        type=otype,
                        pos=top.pos.shifted(dz=1),
                        on_top_of=top.id,
                    )
                    break
            failures += 1
            if failures >= PLACEMENT_RETRY_CAP:
                raise PlacementExhausted(
                    f"no landing cell for object {slot} after {failures} retries"
                )
        jitter = tuple(float(v) for v in rng.uniform(-JITTER, JITTER, size=3))
        obj = dataclasses.replace(obj, jitter=jitter)
        placed[slot] = obj
        column_top[(x, y)] = obj

    for group in (ObjectType.DRAWER, ObjectType.CUBE, ObjectType.CUP):
        for slot, otype in enumerate(types):
            if otype is group:
                land(slot, otype)

    # Attributes in slot order; cubes always carry state 0.
    for slot, otype in enumerate(types):
        if otype in (ObjectType.DRAWER, ObjectType.CUP):
            placed[slot] = dataclasses.replace(placed[slot], state=int(rng.integers(0, 2)))

    eef_pos = GridPos(*(int(v) for v in rng.integers(0, GRID, size=3)))
    holding: int | None = None
    grab_coin = int(rng.integers(0, 2))
    candidates = sorted(
        slot
        for slot, o in placed.items()
        if o.type in (ObjectType.CUP, ObjectType.CUBE)
        and not any(p.on_top_of == slot for p in placed.values())
    )
    if grab_coin and candidates:
        holding = int(rng.choice(candidates))
        held = placed[holding]
        placed[holding] = dataclasses.replace(
            held, pos=eef_pos, on_top_of=None, inside_of=None
        )

    objects = tuple(placed[slot] for slot in range(n))
    return Scene(objects=objects, gripper=GripperState(holding=holding, eef_pos=eef_pos))


def distances_to_focus(scene: Scene, focus) -> np.ndarray:
    """Per-slot Euclidean distance from object center to the focus point.

    Returns a 7-vector in grid units; empty slots read ABSENT_SLOT_DISTANCE.
    """
    f = check_vector(focus, 3, "focus")
    out = np.full(MAX_OBJECTS, ABSENT_SLOT_DISTANCE, dtype=float)
    for o in scene.objects:
        out[o.id] = float(np.linalg.norm(o.center() - f))
    return out


def object_graspable(scene: Scene, object_id: int) -> bool:
    """True iff the object is a cup or cube, unburdened, and not shut away."""
    o = scene.obj(object_id)
    if o.type not in (ObjectType.CUP, ObjectType.CUBE):
        return False
    if scene.object_on_top_of(object_id) is not None:
        return False
    if o.inside_of is not None and scene.obj(o.inside_of).state == 0:
        return False
    return True


def scene_check(scene: Scene) -> list[str]:
    """All violated scene invariants, empty for a valid scene."""
    v: list[str] = []
    objs = scene.objects
    if len(objs) > MAX_OBJECTS:
        v.append(f"more than {MAX_OBJECTS} objects")
    ids = [o.id for o in objs]
    if ids != list(range(len(objs))):
        v.append("object ids are not consecutive slot indices")
    else:
        for o in objs:
            if o.type is not LEADING_TYPES[o.id]:
                v.append(f"object {o.id}: type {o.type.value} breaks the leading-type order")

    by_id = {o.id: o for o in objs}
    for o in objs:
        if not o.pos.in_grid():
            v.append(f"object {o.id}: position outside grid")
        if any(abs(j) > JITTER + 1e-12 for j in o.jitter):
            v.append(f"object {o.id}: jitter out of range")
        if o.state not in (0, 1):
            v.append(f"object {o.id}: state not binary")
        if o.type is ObjectType.CUBE and o.state != 0:
            v.append(f"object {o.id}: cube state must be 0")
        if o.type is ObjectType.DRAWER and o.pos.z != 0:
            v.append(f"object {o.id}: drawer off ground")
        if o.on_top_of is not None and o.inside_of is not None:
            v.append(f"object {o.id}: both stacked and contained")
        if o.on_top_of is not None:
            base = by_id.get(o.on_top_of)
            if base is None:
                v.append(f"object {o.id}: on_top_of references missing id {o.on_top_of}")
            else:
                if base.type is not ObjectType.CUBE:
                    v.append(f"object {o.id}: stacked on a non-cube")
                if o.pos != base.pos.shifted(dz=1):
                    v.append(f"object {o.id}: stacked pose does not sit on its support")
        if o.inside_of is not None:
            box = by_id.get(o.inside_of)
            if box is None:
                v.append(f"object {o.id}: inside_of references missing id {o.inside_of}")
            else:
                if box.type is not ObjectType.DRAWER:
                    v.append(f"object {o.id}: contained in a non-drawer")
                if o.pos != box.pos:
                    v.append(f"object {o.id}: contained pose differs from its drawer")

    for o in objs:  # support/containment chains must terminate
        seen = set()
        cur: SceneObject | None = o
        while cur is not None:
            if cur.id in seen:
                v.append(f"object {o.id}: stacking/containment cycle")
                break
            seen.add(cur.id)
            nxt = cur.on_top_of if cur.on_top_of is not None else cur.inside_of
            cur = by_id.get(nxt) if nxt is not None else None

    cells: dict[GridPos, int] = {}
    for o in objs:
        if scene.is_free_standing(o):
            if o.pos in cells:
                v.append(f"objects {cells[o.pos]} and {o.id}: two objects at one cell")
            else:
                cells[o.pos] = o.id

    g = scene.gripper
    if not g.eef_pos.in_grid():
        v.append("end-effector outside grid")
    if g.holding is not None:
        held = by_id.get(g.holding)
        if held is None:
            v.append(f"gripper holds missing id {g.holding}")
        else:
            if held.pos != g.eef_pos:
                v.append("held object not at end-effector")
            if held.on_top_of is not None or held.inside_of is not None:
                v.append("held object still stacked or contained")
    return v
