"""Action schemas, intent validity, behavior-tree plan expansion, and execution.

Each of the 11 intent actions carries a precondition set over the scene.
An intent (action, target object, metric parameters) expands into a short
sequence of gripper primitives via a per-action behavior tree with one
recovery branch (auto-opening a closed drawer before put_into). Execution
applies primitives one at a time with their own guards, so a planner bug
surfaces as ExecutionFault rather than a corrupt scene.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ExecutionFault, UnknownObject, Unplannable
from .world import (
    GRID,
    GridPos,
    GripperState,
    ObjectType,
    Scene,
    SceneObject,
    object_graspable,
    scene_check,
)


class ActionType(enum.IntEnum):
    PUT_INTO = 0
    PUT_ON_TARGET = 1
    PLACE = 2
    POUR = 3
    PICK_UP = 4
    OPEN = 5
    CLOSE = 6
    MOVE_RIGHT = 7
    MOVE_LEFT = 8
    MOVE_UP = 9
    MOVE_DOWN = 10


N_ACTIONS = len(ActionType)

MOVES = (
    ActionType.MOVE_RIGHT,
    ActionType.MOVE_LEFT,
    ActionType.MOVE_UP,
    ActionType.MOVE_DOWN,
)

#: eef displacement per move action: right/left = x±1, up/down = z±1.
MOVE_DELTAS = {
    ActionType.MOVE_RIGHT: (1, 0, 0),
    ActionType.MOVE_LEFT: (-1, 0, 0),
    ActionType.MOVE_UP: (0, 0, 1),
    ActionType.MOVE_DOWN: (0, 0, -1),
}

#: Actions whose intent carries no target object.
TARGETLESS = frozenset(MOVES) | {ActionType.PLACE}


@dataclass(frozen=True)
class MetricParams:
    """Per-action metric parameters; only pour uses one (tilt angle)."""

    angle_deg: float | None = None

    def as_dict(self) -> dict:
        return {} if self.angle_deg is None else {"angle_deg": self.angle_deg}

    @staticmethod
    def from_dict(d: dict) -> "MetricParams":
        return MetricParams(angle_deg=float(d["angle_deg"]) if "angle_deg" in d else None)

    @staticmethod
    def defaults_for(ta: "ActionType") -> "MetricParams":
        return MetricParams(angle_deg=90.0) if ta is ActionType.POUR else MetricParams()


@dataclass(frozen=True)
class Intent:
    ta: ActionType
    to: int | None = None
    tm: MetricParams = field(default_factory=MetricParams)


class Primitive(enum.Enum):
    OPEN_DRAWER = "open_drawer"
    CLOSE_DRAWER = "close_drawer"
    GRASP = "grasp"
    RELEASE_AT = "release_at"
    MOVE_EEF = "move_eef"
    ROTATE_HELD = "rotate_held"


@dataclass(frozen=True)
class ActionStep:
    primitive: Primitive
    target: int | None = None
    cell: GridPos | None = None
    angle_deg: float | None = None

    def as_dict(self) -> dict:
        args: dict = {}
        if self.target is not None:
            args["target"] = self.target
        if self.cell is not None:
            args["cell"] = [self.cell.x, self.cell.y, self.cell.z]
        if self.angle_deg is not None:
            args["angle_deg"] = self.angle_deg
        return {"primitive": self.primitive.value, "args": args}


@dataclass(frozen=True)
class Plan:
    steps: tuple[ActionStep, ...]
    intent: Intent

    def as_json(self) -> list[dict]:
        return [s.as_dict() for s in self.steps]


def _held(scene: Scene) -> SceneObject | None:
    if scene.gripper.holding is None:
        return None
    return scene.obj(scene.gripper.holding)


def preconditions(ta: ActionType, to: int | None, scene: Scene) -> list[str]:
    """Unsatisfied preconditions for executing (ta, to) in the scene.

    Empty list means the intent is immediately executable. The target id
    must resolve when given; moves and place take to=None.
    """
    target = scene.obj(to) if to is not None else None
    held = _held(scene)
    unmet: list[str] = []

    if ta in MOVES:
        dest = scene.gripper.eef_pos.shifted(*MOVE_DELTAS[ta])
        if not dest.in_grid():
            unmet.append("destination cell in grid")
        return unmet

    if ta is ActionType.PLACE:
        if held is None:
            unmet.append("gripper holding")
        if not _free_ground_cells(scene):
            unmet.append("free ground cell exists")
        return unmet

    if target is None:
        raise UnknownObject(f"action {ta.name} requires a target object")

    if ta is ActionType.PUT_INTO:
        if target.type is not ObjectType.DRAWER:
            unmet.append("target is a drawer")
        elif target.state != 1:
            unmet.append("drawer open")
        if held is None:
            unmet.append("gripper holding")
    elif ta is ActionType.PUT_ON_TARGET:
        if target.type is not ObjectType.CUBE:
            unmet.append("target is a cube")
        if held is None:
            unmet.append("gripper holding")
        elif held.id == target.id:
            unmet.append("target distinct from held object")
        if scene.object_on_top_of(target.id) is not None:
            unmet.append("nothing on target")
    elif ta is ActionType.POUR:
        if held is None or held.type is not ObjectType.CUP:
            unmet.append("gripper holds a cup")
        elif held.state != 1:
            unmet.append("held cup full")
        if target.type is not ObjectType.CUP:
            unmet.append("target is a cup")
        elif held is not None and held.id == target.id:
            unmet.append("target distinct from held cup")
    elif ta is ActionType.PICK_UP:
        if target.type not in (ObjectType.CUP, ObjectType.CUBE):
            unmet.append("target is a cup or cube")
        if held is not None:
            unmet.append("gripper empty")
        if not object_graspable(scene, target.id):
            unmet.append("target graspable")
    elif ta is ActionType.OPEN:
        if target.type is not ObjectType.DRAWER:
            unmet.append("target is a drawer")
        elif target.state != 0:
            unmet.append("drawer closed")
    elif ta is ActionType.CLOSE:
        if target.type is not ObjectType.DRAWER:
            unmet.append("target is a drawer")
        elif target.state != 1:
            unmet.append("drawer open")
    return unmet


def valid_intents(scene: Scene) -> list[tuple[ActionType, int | None]]:
    """All (action, target) pairs whose precondition list is empty."""
    out: list[tuple[ActionType, int | None]] = []
    for ta in ActionType:
        if ta in TARGETLESS:
            if not preconditions(ta, None, scene):
                out.append((ta, None))
        else:
            for o in scene.objects:
                if not preconditions(ta, o.id, scene):
                    out.append((ta, o.id))
    return out


def plannable_intents(scene: Scene) -> list[tuple[ActionType, int | None]]:
    """Pairs the planner can realize: valid intents plus recoverable ones.

    put_into aimed at a closed drawer is the single recoverable case — the
    behavior tree opens the drawer first — so it is offered at inference
    time even though it never appears as a dataset label.
    """
    out = valid_intents(scene)
    if scene.gripper.holding is not None:
        for o in scene.objects:
            if o.type is ObjectType.DRAWER and o.state == 0:
                out.append((ActionType.PUT_INTO, o.id))
    return out


def _occupied(scene: Scene, exclude: int | None = None) -> set[GridPos]:
    return {o.pos for o in scene.objects if o.id != exclude}


def _free_ground_cells(scene: Scene) -> list[GridPos]:
    taken = _occupied(scene, exclude=scene.gripper.holding)
    return [
        GridPos(x, y, 0)
        for x in range(GRID)
        for y in range(GRID)
        if GridPos(x, y, 0) not in taken
    ]


def _place_cell(scene: Scene, focus: np.ndarray | None) -> GridPos:
    """Free ground cell nearest the focus point (eef when focus is absent)."""
    cells = _free_ground_cells(scene)
    if not cells:
        raise Unplannable("no free ground cell")
    ref = np.asarray(focus, dtype=float) if focus is not None else scene.gripper.eef_pos.as_array()
    return min(cells, key=lambda c: (float(np.linalg.norm(c.as_array() - ref)), (c.x, c.y, c.z)))


def _approach_and_release(landing: GridPos) -> list[ActionStep]:
    hover = landing.shifted(dz=1)
    if not landing.in_grid() or not hover.in_grid():
        raise Unplannable("no room above the landing cell")
    steps = [
        ActionStep(Primitive.MOVE_EEF, cell=hover),
        ActionStep(Primitive.RELEASE_AT, cell=landing),
    ]
    retreat = hover.shifted(dz=1)
    if retreat.in_grid():
        steps.append(ActionStep(Primitive.MOVE_EEF, cell=retreat))
    return steps


def plan(intent: Intent, scene: Scene, focus: np.ndarray | None = None) -> Plan:
    """Behavior-tree expansion of an intent into primitive steps.

    Recoverable failed preconditions insert recovery steps (a closed drawer
    is opened before put_into); anything else unmet raises Unplannable.
    The optional focus point steers place's landing-cell choice.
    """
    ta, to = intent.ta, intent.to
    target = scene.obj(to) if to is not None else None
    held = _held(scene)

    unmet = preconditions(ta, to, scene)
    recoverable = {"drawer open"} if ta is ActionType.PUT_INTO else set()
    hard = [u for u in unmet if u not in recoverable]
    if hard:
        raise Unplannable(f"{ta.name}: unmet preconditions {hard}")

    steps: list[ActionStep] = []
    if ta in MOVES:
        dest = scene.gripper.eef_pos.shifted(*MOVE_DELTAS[ta])
        steps = [ActionStep(Primitive.MOVE_EEF, cell=dest)]
    elif ta is ActionType.PLACE:
        steps = _approach_and_release(_place_cell(scene, focus))
    elif ta is ActionType.PUT_INTO:
        assert target is not None
        if target.state == 0:
            steps.append(ActionStep(Primitive.OPEN_DRAWER, target=target.id))
        steps += _approach_and_release(target.pos)
    elif ta is ActionType.PUT_ON_TARGET:
        assert target is not None
        steps = _approach_and_release(target.pos.shifted(dz=1))
    elif ta is ActionType.POUR:
        assert target is not None and held is not None
        hover = target.pos.shifted(dz=1)
        if not hover.in_grid():
            raise Unplannable("no room above the target cup")
        angle = intent.tm.angle_deg if intent.tm.angle_deg is not None else 90.0
        steps = [
            ActionStep(Primitive.MOVE_EEF, cell=hover),
            ActionStep(Primitive.ROTATE_HELD, target=target.id, angle_deg=angle),
        ]
    elif ta is ActionType.PICK_UP:
        assert target is not None
        hover = target.pos.shifted(dz=1)
        if not hover.in_grid():
            raise Unplannable("no room above the target")
        steps = [
            ActionStep(Primitive.MOVE_EEF, cell=hover),
            ActionStep(Primitive.GRASP, target=target.id),
        ]
    elif ta is ActionType.OPEN:
        assert target is not None
        steps = [ActionStep(Primitive.OPEN_DRAWER, target=target.id)]
    elif ta is ActionType.CLOSE:
        assert target is not None
        steps = [ActionStep(Primitive.CLOSE_DRAWER, target=target.id)]

    if not steps:
        raise Unplannable(f"{ta.name}: nothing to do")
    return Plan(steps=tuple(steps), intent=intent)


def _step(scene: Scene, step: ActionStep) -> Scene:
    g = scene.gripper
    held = _held(scene)
    p = step.primitive

    if p is Primitive.MOVE_EEF:
        assert step.cell is not None
        if not step.cell.in_grid():
            raise ExecutionFault("move_eef outside grid")
        scene = scene.with_gripper(dataclasses.replace(g, eef_pos=step.cell))
        if held is not None:
            scene = scene.with_object(dataclasses.replace(held, pos=step.cell))
        return scene

    if p in (Primitive.OPEN_DRAWER, Primitive.CLOSE_DRAWER):
        drawer = scene.obj(step.target)
        want = 0 if p is Primitive.OPEN_DRAWER else 1
        if drawer.type is not ObjectType.DRAWER:
            raise ExecutionFault(f"{p.value} on a non-drawer")
        if drawer.state != want:
            raise ExecutionFault(f"{p.value}: drawer in wrong state")
        return scene.with_object(dataclasses.replace(drawer, state=1 - want))

    if p is Primitive.GRASP:
        target = scene.obj(step.target)
        if held is not None:
            raise ExecutionFault("grasp with full gripper")
        if g.eef_pos != target.pos.shifted(dz=1):
            raise ExecutionFault("grasp without hovering over the target")
        if not object_graspable(scene, target.id):
            raise ExecutionFault("grasp on ungraspable object")
        scene = scene.with_object(
            dataclasses.replace(target, pos=g.eef_pos, on_top_of=None, inside_of=None)
        )
        return scene.with_gripper(dataclasses.replace(g, holding=target.id))

    if p is Primitive.RELEASE_AT:
        assert step.cell is not None
        cell = step.cell
        if held is None:
            raise ExecutionFault("release with empty gripper")
        if g.eef_pos != cell.shifted(dz=1):
            raise ExecutionFault("release without hovering over the cell")
        at_cell = [o for o in scene.objects if o.pos == cell and o.id != held.id]
        drawer = next((o for o in at_cell if o.type is ObjectType.DRAWER), None)
        if drawer is not None:
            if drawer.state != 1:
                raise ExecutionFault("release into a closed drawer")
            placed = dataclasses.replace(held, pos=cell, inside_of=drawer.id, on_top_of=None)
        elif at_cell:
            raise ExecutionFault("release into an occupied cell")
        elif cell.z == 0:
            placed = dataclasses.replace(held, pos=cell, on_top_of=None, inside_of=None)
        else:
            below = [
                o
                for o in scene.objects
                if o.pos == cell.shifted(dz=-1) and o.id != held.id
            ]
            support = next((o for o in below if o.type is ObjectType.CUBE), None)
            if support is None:
                raise ExecutionFault("release over empty air")
            placed = dataclasses.replace(held, pos=cell, on_top_of=support.id, inside_of=None)
        scene = scene.with_object(placed)
        return scene.with_gripper(dataclasses.replace(g, holding=None))

    if p is Primitive.ROTATE_HELD:
        target = scene.obj(step.target)
        if held is None or held.type is not ObjectType.CUP:
            raise ExecutionFault("rotate_held without a held cup")
        if held.state != 1:
            raise ExecutionFault("rotate_held with an empty cup")
        if target.type is not ObjectType.CUP:
            raise ExecutionFault("pour into a non-cup")
        angle = step.angle_deg if step.angle_deg is not None else 90.0
        if angle >= 90.0:
            scene = scene.with_object(dataclasses.replace(held, state=0))
            scene = scene.with_object(dataclasses.replace(scene.obj(target.id), state=1))
        return scene

    raise ExecutionFault(f"unknown primitive {p}")


def execute(scene: Scene, plan_: Plan | ActionStep) -> Scene:
    """Run a plan (or single step) and return the successor scene."""
    steps = plan_.steps if isinstance(plan_, Plan) else (plan_,)
    for step in steps:
        scene = _step(scene, step)
    bad = scene_check(scene)
    if bad:
        raise ExecutionFault(f"execution left an invalid scene: {bad}")
    return scene
