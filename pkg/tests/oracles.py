"""Independent oracles the test suite checks the package against.

Everything here is deliberately re-derived from first principles with the
dumbest correct algorithm available (exhaustive enumeration, brute-force
search, finite differences) so that agreement with the package is evidence
rather than tautology.
"""

from __future__ import annotations

import itertools

import numpy as np

from gesturelab.actions import ActionType, Intent, MetricParams, Plan
from gesturelab.world import GridPos, GripperState, ObjectType, Scene, SceneObject

# ---------------------------------------------------------------- scenes


def make_scene(objects, holding=None, eef=(0, 0, 0)) -> Scene:
    """Compact scene builder for hand-written test fixtures.

    objects: list of dicts with keys type (str), pos (tuple), and optional
    state/on/in/jitter; slot ids are assigned in list order.
    """
    objs = []
    for i, spec in enumerate(objects):
        objs.append(
            SceneObject(
                id=i,
                type=ObjectType(spec["type"]),
                pos=GridPos(*spec["pos"]),
                jitter=tuple(spec.get("jitter", (0.0, 0.0, 0.0))),
                state=spec.get("state", 0),
                on_top_of=spec.get("on"),
                inside_of=spec.get("in"),
            )
        )
    return Scene(
        objects=tuple(objs),
        gripper=GripperState(holding=holding, eef_pos=GridPos(*eef)),
    )


# ------------------------------------------------- precondition oracle


def _oracle_graspable(scene: Scene, o: SceneObject) -> bool:
    if o.type not in (ObjectType.CUP, ObjectType.CUBE):
        return False
    if any(other.on_top_of == o.id for other in scene.objects):
        return False
    if o.inside_of is not None:
        box = next(x for x in scene.objects if x.id == o.inside_of)
        if box.state == 0:
            return False
    return True


def oracle_intent_valid(scene: Scene, ta: ActionType, to: int | None) -> bool:
    """Spec's Eq.-8-style precondition table, re-derived independently."""
    held = None
    if scene.gripper.holding is not None:
        held = next(o for o in scene.objects if o.id == scene.gripper.holding)
    target = None
    if to is not None:
        target = next((o for o in scene.objects if o.id == to), None)
        if target is None:
            return False

    moves = {
        ActionType.MOVE_RIGHT: (1, 0, 0),
        ActionType.MOVE_LEFT: (-1, 0, 0),
        ActionType.MOVE_UP: (0, 0, 1),
        ActionType.MOVE_DOWN: (0, 0, -1),
    }
    if ta in moves:
        if to is not None:
            return False
        d = moves[ta]
        e = scene.gripper.eef_pos
        return all(0 <= c <= 3 for c in (e.x + d[0], e.y + d[1], e.z + d[2]))
    if ta == ActionType.PLACE:
        if to is not None:
            return False
        if held is None:
            return False
        taken = {
            (o.pos.x, o.pos.y, o.pos.z) for o in scene.objects if o.id != held.id
        }
        return any(
            (x, y, 0) not in taken for x in range(4) for y in range(4)
        )
    if target is None:
        return False
    if ta == ActionType.PUT_INTO:
        return target.type is ObjectType.DRAWER and target.state == 1 and held is not None
    if ta == ActionType.PUT_ON_TARGET:
        return (
            target.type is ObjectType.CUBE
            and held is not None
            and held.id != target.id
            and not any(o.on_top_of == target.id for o in scene.objects)
        )
    if ta == ActionType.POUR:
        return (
            held is not None
            and held.type is ObjectType.CUP
            and held.state == 1
            and target.type is ObjectType.CUP
            and target.id != held.id
        )
    if ta == ActionType.PICK_UP:
        return (
            target.type in (ObjectType.CUP, ObjectType.CUBE)
            and held is None
            and _oracle_graspable(scene, target)
        )
    if ta == ActionType.OPEN:
        return target.type is ObjectType.DRAWER and target.state == 0
    if ta == ActionType.CLOSE:
        return target.type is ObjectType.DRAWER and target.state == 1
    return False


def oracle_valid_intents(scene: Scene) -> set[tuple[ActionType, int | None]]:
    pairs = set()
    targets: list[int | None] = [None] + [o.id for o in scene.objects]
    for ta, to in itertools.product(list(ActionType), targets):
        if oracle_intent_valid(scene, ta, to):
            pairs.add((ta, to))
    return pairs


# ------------------------------------------------ postcondition oracle


def check_intent_postcondition(before: Scene, intent: Intent, after: Scene) -> list[str]:
    """Problems with the executed outcome of a valid intent; [] when correct.

    Also enforces the frame property: objects the intent does not touch
    must be bit-identical.
    """
    errs: list[str] = []
    ta, to = intent.ta, intent.to
    b = {o.id: o for o in before.objects}
    a = {o.id: o for o in after.objects}
    if set(b) != set(a):
        return ["object set changed"]

    held_id = before.gripper.holding
    touched: set[int] = set()

    moves = {
        ActionType.MOVE_RIGHT: (1, 0, 0),
        ActionType.MOVE_LEFT: (-1, 0, 0),
        ActionType.MOVE_UP: (0, 0, 1),
        ActionType.MOVE_DOWN: (0, 0, -1),
    }
    if ta in moves:
        d = moves[ta]
        e = before.gripper.eef_pos
        want = (e.x + d[0], e.y + d[1], e.z + d[2])
        got = after.gripper.eef_pos
        if (got.x, got.y, got.z) != want:
            errs.append("eef not displaced by one cell")
        if after.gripper.holding != held_id:
            errs.append("holding changed")
        if held_id is not None:
            touched.add(held_id)
            if (a[held_id].pos.x, a[held_id].pos.y, a[held_id].pos.z) != want:
                errs.append("held object did not follow the eef")
    elif ta == ActionType.PICK_UP:
        touched.add(to)
        if after.gripper.holding != to:
            errs.append("target not in gripper")
        if a[to].pos != after.gripper.eef_pos:
            errs.append("held target not at eef")
        if a[to].on_top_of is not None or a[to].inside_of is not None:
            errs.append("held target still attached")
    elif ta == ActionType.PLACE:
        touched.add(held_id)
        if after.gripper.holding is not None:
            errs.append("gripper still holding")
        o = a[held_id]
        if o.pos.z != 0 or o.on_top_of is not None or o.inside_of is not None:
            errs.append("object not free-standing on the ground")
        if any(
            other.pos == o.pos for oid, other in b.items() if oid != held_id
        ):
            errs.append("object landed on an occupied cell")
    elif ta == ActionType.PUT_ON_TARGET:
        touched.add(held_id)
        o = a[held_id]
        if after.gripper.holding is not None:
            errs.append("gripper still holding")
        if o.on_top_of != to:
            errs.append("object not stacked on target")
        tp = b[to].pos
        if (o.pos.x, o.pos.y, o.pos.z) != (tp.x, tp.y, tp.z + 1):
            errs.append("object not directly above target")
    elif ta == ActionType.PUT_INTO:
        touched.update({held_id, to})
        o = a[held_id]
        if after.gripper.holding is not None:
            errs.append("gripper still holding")
        if o.inside_of != to:
            errs.append("object not inside target drawer")
        if o.pos != b[to].pos:
            errs.append("object not at drawer cell")
        if a[to].state != 1:
            errs.append("drawer not open after put_into")
    elif ta == ActionType.POUR:
        touched.update({held_id, to})
        if after.gripper.holding != held_id:
            errs.append("held cup released during pour")
        if a[held_id].state != 0:
            errs.append("held cup still full")
        if a[to].state != 1:
            errs.append("target cup not full")
    elif ta == ActionType.OPEN:
        touched.add(to)
        if a[to].state != 1:
            errs.append("drawer not open")
        if after.gripper != before.gripper:
            errs.append("gripper changed by open")
    elif ta == ActionType.CLOSE:
        touched.add(to)
        if a[to].state != 0:
            errs.append("drawer not closed")
        if after.gripper != before.gripper:
            errs.append("gripper changed by close")

    for oid, obj in b.items():
        if oid in touched or oid is None:
            continue
        after_obj = a[oid]
        if ta == ActionType.POUR and oid == held_id:
            continue
        # pick_up may lift an object off a support or out of a drawer; the
        # support itself must still be untouched, which this covers.
        if after_obj != obj:
            errs.append(f"untouched object {oid} changed")
    return errs


# ----------------------------------------------------------------- dtw


def enumerate_dtw_paths(n: int, m: int) -> list[list[tuple[int, int, int]]]:
    """All monotone warping paths from (0,0) to (n-1,m-1) with step weights.

    Each path is a list of (i, j, w) triples: the start cell carries weight 2,
    a diagonal step weight 2, a horizontal or vertical step weight 1 — the
    symmetric2 step pattern.
    """
    paths: list[list[tuple[int, int, int]]] = []

    def walk(i: int, j: int, acc: list[tuple[int, int, int]]) -> None:
        if i == n - 1 and j == m - 1:
            paths.append(list(acc))
            return
        if i + 1 < n:
            acc.append((i + 1, j, 1))
            walk(i + 1, j, acc)
            acc.pop()
        if j + 1 < m:
            acc.append((i, j + 1, 1))
            walk(i, j + 1, acc)
            acc.pop()
        if i + 1 < n and j + 1 < m:
            acc.append((i + 1, j + 1, 2))
            walk(i + 1, j + 1, acc)
            acc.pop()

    walk(0, 0, [(0, 0, 2)])
    return paths


def brute_force_dtw(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum weighted path cost over explicitly enumerated warping paths.

    Independent of any dynamic program: every admissible alignment is priced
    in full and the cheapest one wins, normalized by n + m.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    best = np.inf
    for path in enumerate_dtw_paths(n, m):
        total = sum(w * cost[i, j] for i, j, w in path)
        best = min(best, total)
    return best / (n + m)


# ----------------------------------------------------------------- gradients


def finite_difference_elbo(mus, log_stds, eps_draws, X, y_idx, prior_std, kl_scale=1.0, h=1e-6):
    """Central-difference gradients of the ELBO, for checking backprop."""
    from gesturelab.vmlp import elbo_and_grads

    def value(ms, ls):
        e, _, _ = elbo_and_grads(ms, ls, eps_draws, X, y_idx, prior_std, kl_scale)
        return e

    fd_mu = [np.zeros_like(m) for m in mus]
    fd_ls = [np.zeros_like(m) for m in mus]
    for li in range(len(mus)):
        for idx in np.ndindex(mus[li].shape):
            for src, out in ((mus, fd_mu), (log_stds, fd_ls)):
                plus = [m.copy() for m in mus]
                pls = [s.copy() for s in log_stds]
                tgt = plus if src is mus else pls
                tgt[li][idx] += h
                up = value(plus, pls)
                minus = [m.copy() for m in mus]
                mls = [s.copy() for s in log_stds]
                tgt = minus if src is mus else mls
                tgt[li][idx] -= h
                down = value(minus, mls)
                out[li][idx] = (up - down) / (2 * h)
    return fd_mu, fd_ls
