"""Experiment runner behind the ``gil`` command line.

Every command is a plain function so tests can drive it without a shell;
the CLI layer only parses flags and maps exceptions onto exit codes. All
artifacts carry a provenance header (seed, decision-table hash, config) so
any file can be regenerated from its own first line.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .actions import ActionType, Intent, plan as plan_intent, execute
from .datasetgen import Dataset, generate_dataset, load_dataset, save_dataset
from .exceptions import SchemaMismatch, TooFewRecords
from .gestures import (
    extract_metrics,
    load_library,
    load_replay,
    make_replay,
    run_episode,
    save_replay,
    save_trace,
    train_default_library,
)
from .intentnet import (
    MODELS,
    FeatureConfig,
    TrainSettings,
    evaluate_heads,
    infer_intent,
    train_heads,
)
from .usersim import LEVEL_DIMS, build_table, sample_focus
from .vmlp import VariationalMLPClassifier
from .world import sample_scene

# The weight-initialization stream is offset from the data stream so a cell's
# dataset seed never doubles as its optimizer seed.
HEAD_SEED_BASE = 1000

DEFAULT_TRAIN_SIZE = 4000
DEFAULT_TEST_SIZE = 500
CURVE_COUNTS = (100, 300, 1000, 2000, 4000)

LEVELS = tuple(LEVEL_DIMS)


# ----------------------------------------------------------------- provenance


def _provenance(**config) -> dict:
    return {k: v for k, v in config.items() if v is not None}


def _table_hashes(levels, seeds) -> dict[str, str]:
    return {
        f"{level}/{seed}": build_table(level, seed).hash()
        for level in levels
        for seed in seeds
    }


def _write_csv(path, provenance: dict, fieldnames, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue())


def read_result_csv(path) -> tuple[dict, list[dict]]:
    """Load a harness CSV back: (provenance, rows)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise SchemaMismatch("missing provenance header line")
    provenance = json.loads(lines[0][2:])
    rows = list(csv.DictReader(lines[1:]))
    return provenance, rows


def _settings(epochs: int | None) -> TrainSettings:
    base = TrainSettings.fast()
    if epochs is None:
        return base
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    from dataclasses import replace

    return replace(base, epochs=epochs)


# ------------------------------------------------------------------- generate


def cmd_generate(level: str, n: int, seed: int, out, workers: int | None = None) -> Path:
    """Build one dataset file; prints record count and table hash."""
    ds = generate_dataset(level, seed, n, workers=workers)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    print(f"wrote {len(ds)} {level} records to {out} (table {ds.table_hash})")
    return out


# ----------------------------------------------------------------- grid cells


def _run_cell(model: str, level: str, seed: int, train_size: int, test_size: int,
              epochs: int | None) -> dict:
    """Train and score one (model, dataset, seed) cell.

    The dataset is regenerated in-process: records depend only on
    (level, seed, index), so this is byte-equivalent to loading a file.
    """
    t0 = time.perf_counter()
    ds = generate_dataset(level, seed, train_size + test_size)
    train, test = ds.split(train_size, test_size)
    cfg = FeatureConfig.for_model(model)
    action, object_ = train_heads(train, cfg, _settings(epochs), HEAD_SEED_BASE + seed)
    scores = evaluate_heads(action, object_, test, cfg)
    return {
        "model": model,
        "dataset": level,
        "seed": seed,
        "balanced_accuracy": round(scores["balanced_accuracy"], 6),
        "joint_accuracy": round(scores["joint_accuracy"], 6),
        "wall_time": round(time.perf_counter() - t0, 2),
    }


def _cell_star(args) -> dict:
    try:
        return _run_cell(*args)
    except Exception as err:  # noqa: BLE001 - a cell failure must not kill the grid
        model, level, seed = args[:3]
        return {
            "model": model,
            "dataset": level,
            "seed": seed,
            "balanced_accuracy": float("nan"),
            "joint_accuracy": float("nan"),
            "wall_time": float("nan"),
            "error": f"{type(err).__name__}: {err}",
        }


def _run_cells(cells, threads: int) -> list[dict]:
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_cell_star, cells))
    else:
        rows = [_cell_star(c) for c in cells]
    for row in rows:
        err = row.pop("error", None)
        if err:
            print(f"cell {row['model']}/{row['dataset']}/seed{row['seed']} failed: {err}")
    return rows


def _mean_rows(rows, group_keys, value_keys) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in group_keys), []).append(row)
    out = []
    for key, members in groups.items():
        mean = dict(zip(group_keys, key))
        mean["seed"] = "mean"
        for k in value_keys:
            vals = [m[k] for m in members if np.isfinite(m[k])]
            mean[k] = round(float(np.mean(vals)), 6) if vals else float("nan")
        out.append(mean)
    return out


def cmd_grid(
    models=MODELS,
    levels=LEVELS,
    seeds=(0, 1, 2),
    train_size: int = DEFAULT_TRAIN_SIZE,
    test_size: int = DEFAULT_TEST_SIZE,
    epochs: int | None = None,
    out="grid.csv",
    threads: int = 1,
) -> Path:
    """Score every requested (model, dataset, seed) cell into one CSV."""
    models, levels, seeds = list(models), list(levels), list(seeds)
    if not models or not levels or not seeds:
        raise ValueError("grid needs at least one model, level, and seed")
    unknown = [m for m in models if m not in MODELS] + [l for l in levels if l not in LEVELS]
    if unknown:
        raise ValueError(f"unknown grid axis entries: {unknown}")
    if min(train_size, test_size) < 1:
        raise TooFewRecords("train and test sizes must be >= 1")

    cells = [
        (m, l, s, train_size, test_size, epochs)
        for m in models
        for l in levels
        for s in seeds
    ]
    rows = _run_cells(cells, threads)
    rows += _mean_rows(rows, ("model", "dataset"), ("balanced_accuracy", "joint_accuracy", "wall_time"))

    provenance = _provenance(
        kind="grid",
        models=models,
        levels=levels,
        seeds=seeds,
        train_size=train_size,
        test_size=test_size,
        epochs=epochs or TrainSettings.fast().epochs,
        head_seed_base=HEAD_SEED_BASE,
        table_hash=_table_hashes(levels, seeds),
    )
    fields = ["model", "dataset", "seed", "balanced_accuracy", "joint_accuracy", "wall_time"]
    _write_csv(out, provenance, fields, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return Path(out)


# -------------------------------------------------------------- learning curve


def _curve_cell(model: str, level: str, seed: int, count: int, pool_size: int,
                test_size: int, epochs: int | None) -> dict:
    t0 = time.perf_counter()
    ds = generate_dataset(level, seed, pool_size + test_size)
    train = Dataset(ds.level, ds.seed, ds.table_hash, ds.records[:count])
    test = Dataset(ds.level, ds.seed, ds.table_hash, ds.records[pool_size:])
    cfg = FeatureConfig.for_model(model)
    action, object_ = train_heads(train, cfg, _settings(epochs), HEAD_SEED_BASE + seed)
    scores = evaluate_heads(action, object_, test, cfg)
    return {
        "count": count,
        "seed": seed,
        "balanced_accuracy": round(scores["balanced_accuracy"], 6),
        "joint_accuracy": round(scores["joint_accuracy"], 6),
        "wall_time": round(time.perf_counter() - t0, 2),
    }


def _curve_cell_star(args) -> dict:
    try:
        return _curve_cell(*args)
    except Exception as err:  # noqa: BLE001
        count, seed = args[3], args[2]
        return {
            "count": count,
            "seed": seed,
            "balanced_accuracy": float("nan"),
            "joint_accuracy": float("nan"),
            "wall_time": float("nan"),
            "error": f"{type(err).__name__}: {err}",
        }


def cmd_learning_curve(
    counts=CURVE_COUNTS,
    seeds=(0, 1, 2),
    level: str = "D4",
    model: str = "M5",
    test_size: int = DEFAULT_TEST_SIZE,
    epochs: int | None = None,
    out="curve.csv",
    threads: int = 1,
) -> Path:
    """Accuracy vs. training-set size on one dataset level.

    Each seed generates a single record pool; every count trains on a prefix
    of it and all counts share the held-out suffix, so the curve varies only
    the amount of data.
    """
    counts, seeds = sorted(set(int(c) for c in counts)), list(seeds)
    if not counts or not seeds:
        raise ValueError("curve needs at least one count and one seed")
    if counts[0] < 1:
        raise TooFewRecords("sample counts must be >= 1")
    if test_size < 1:
        raise TooFewRecords("test size must be >= 1")
    pool = counts[-1]

    cells = [(model, level, s, c, pool, test_size, epochs) for s in seeds for c in counts]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool_exec:
            rows = list(pool_exec.map(_curve_cell_star, cells))
    else:
        rows = [_curve_cell_star(c) for c in cells]
    for row in rows:
        err = row.pop("error", None)
        if err:
            print(f"curve cell n={row['count']}/seed{row['seed']} failed: {err}")
    rows += _mean_rows(rows, ("count",), ("balanced_accuracy", "joint_accuracy", "wall_time"))

    provenance = _provenance(
        kind="learning_curve",
        model=model,
        level=level,
        counts=counts,
        seeds=seeds,
        test_size=test_size,
        epochs=epochs or TrainSettings.fast().epochs,
        head_seed_base=HEAD_SEED_BASE,
        table_hash=_table_hashes([level], seeds),
    )
    fields = ["count", "seed", "balanced_accuracy", "joint_accuracy", "wall_time"]
    _write_csv(out, provenance, fields, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return Path(out)


# ---------------------------------------------------------------------- train


def _write_train_log(path, history) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["epoch", "elbo", "heldout_balanced_accuracy"]
        )
        writer.writeheader()
        for row in history:
            writer.writerow(row)


def cmd_train(
    level: str = "D4",
    model: str = "M5",
    seed: int = 0,
    train_size: int = DEFAULT_TRAIN_SIZE,
    test_size: int = DEFAULT_TEST_SIZE,
    epochs: int | None = None,
    out="models",
    dataset_path=None,
) -> Path:
    """Train intent heads plus the gesture library into a model directory.

    Writes action_head.json / object_head.json / library.json, per-head
    training logs, and metrics.json with the held-out scores and provenance.
    """
    t0 = time.perf_counter()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if dataset_path is not None:
        ds = load_dataset(dataset_path)
        if ds.level != level:
            raise SchemaMismatch(f"dataset file is {ds.level}, requested {level}")
    else:
        ds = generate_dataset(level, seed, train_size + test_size)
    train, test = ds.split(train_size, test_size)

    cfg = FeatureConfig.for_model(model)
    action, object_ = train_heads(train, cfg, _settings(epochs), HEAD_SEED_BASE + seed)
    scores = evaluate_heads(action, object_, test, cfg)

    action.save(out / "action_head.json")
    object_.save(out / "object_head.json")
    _write_train_log(out / "train_log_action.csv", action.history_)
    _write_train_log(out / "train_log_object.csv", object_.history_)

    from .gestures import save_library

    library = train_default_library(seed=seed)
    save_library(library, out / "library.json")

    metrics = {
        "provenance": _provenance(
            kind="train",
            level=level,
            model=model,
            seed=seed,
            train_size=train_size,
            test_size=test_size,
            epochs=epochs or TrainSettings.fast().epochs,
            head_seed_base=HEAD_SEED_BASE,
            table_hash=ds.table_hash,
        ),
        **{k: round(v, 6) for k, v in scores.items()},
        "wall_time": round(time.perf_counter() - t0, 2),
    }
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True))
    print(
        f"{model}/{level}/seed{seed}: balanced_accuracy="
        f"{scores['balanced_accuracy']:.4f} joint={scores['joint_accuracy']:.4f} -> {out}"
    )
    return out


# -------------------------------------------------------------------- episode


def _load_models(models_dir):
    models_dir = Path(models_dir)
    metrics = json.loads((models_dir / "metrics.json").read_text())
    model = metrics["provenance"]["model"]
    action = VariationalMLPClassifier.load(models_dir / "action_head.json")
    object_ = VariationalMLPClassifier.load(models_dir / "object_head.json")
    library = load_library(models_dir / "library.json")
    return FeatureConfig.for_model(model), action, object_, library


def _xyz(p) -> tuple[int, int, int]:
    return (p.x, p.y, p.z)


def _scene_diff(before, after) -> list[str]:
    """Human-readable object/gripper changes between two scenes."""
    diffs = []
    b = {o.id: o for o in before.objects}
    for o in after.objects:
        old = b[o.id]
        if old == o:
            continue
        changes = []
        if old.pos != o.pos:
            changes.append(f"pos {_xyz(old.pos)}->{_xyz(o.pos)}")
        if old.state != o.state:
            changes.append(f"state {old.state}->{o.state}")
        if old.on_top_of != o.on_top_of:
            changes.append(f"on {old.on_top_of}->{o.on_top_of}")
        if old.inside_of != o.inside_of:
            changes.append(f"in {old.inside_of}->{o.inside_of}")
        diffs.append(f"object {o.id} ({o.type.name.lower()}): " + ", ".join(changes))
    if before.gripper != after.gripper:
        diffs.append(
            f"gripper: eef {_xyz(before.gripper.eef_pos)}->{_xyz(after.gripper.eef_pos)}, "
            f"holding {before.gripper.holding}->{after.gripper.holding}"
        )
    return diffs or ["(no visible change)"]


def cmd_episode(
    models="models",
    replay=None,
    gestures=None,
    seed: int = 0,
    scene_seed: int = 0,
    user: int = 0,
    target: int | None = None,
    focus=None,
    threshold: float = 0.3,
    noise_mm: float = 5.0,
    out=None,
) -> dict:
    """Run one episode end to end: frames -> gesture vector -> intent -> plan.

    Frames come from a replay file or are synthesized from gesture class
    names; the scene and focus are sampled from their seeds unless an
    explicit focus point is given. Raises NoConfidentIntent when nothing
    feasible clears the confidence threshold.
    """
    cfg, action, object_, library = _load_models(models)

    if replay is not None:
        frames = load_replay(replay)
        source = str(replay)
    else:
        names = list(gestures or [])
        if not names:
            raise ValueError("episode needs --replay FILE or --gestures a,b,...")
        frames = make_replay(names, seed=seed, noise_mm=noise_mm)
        source = "synthetic:" + ",".join(names)

    scene = sample_scene(scene_seed)
    if focus is not None:
        focus = np.asarray(focus, dtype=float)
    else:
        focus = sample_focus(scene, target, scene_seed)

    vector, trace = run_episode(frames, library)
    names_by_slot = [c.name for c in library.classes]
    print(f"episode from {source}: {len(frames)} frames, {len(trace)} detections")
    for t, probs in trace:
        k = int(np.argmax(probs))
        print(f"  t={t:7.3f}s  {names_by_slot[k]:<12} p={probs[k]:.3f}")
    fired = {names_by_slot[i]: round(float(v), 3) for i, v in enumerate(vector) if v > 0}
    print(f"gesture vector: {fired or '(all zero)'}")

    intent = infer_intent(
        action, object_, vector, focus, scene, user, cfg, threshold=threshold
    )
    intent = Intent(intent.ta, intent.to, extract_metrics(frames, intent.ta))
    print(
        f"intent: {intent.ta.name.lower()}"
        + (f" -> object {intent.to}" if intent.to is not None else "")
        + (f" {intent.tm.as_dict()}" if intent.tm.as_dict() else "")
    )

    steps = plan_intent(intent, scene, focus)
    print(f"plan ({len(steps.steps)} steps):")
    for i, step in enumerate(steps.steps):
        d = step.as_dict()
        args = " ".join(f"{k}={v}" for k, v in d["args"].items())
        print(f"  {i}. {d['primitive']}" + (f" {args}" if args else ""))
    after = execute(scene, steps)
    diff = _scene_diff(scene, after)
    print("scene diff:")
    for line in diff:
        print(f"  {line}")

    result = {
        "provenance": _provenance(
            kind="episode",
            models=str(models),
            source=source,
            seed=seed,
            scene_seed=scene_seed,
            user=user,
            target=target,
            threshold=threshold,
        ),
        "gesture_vector": [round(float(v), 6) for v in vector],
        "intent": {
            "ta": int(intent.ta),
            "to": intent.to,
            "metric": intent.tm.as_dict(),
        },
        "plan": steps.as_json(),
        "scene_diff": diff,
    }
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "episode.json").write_text(json.dumps(result, indent=2, sort_keys=True))
        save_trace(out / "trace.csv", trace, names_by_slot)
        if replay is None:
            save_replay(out / "replay.jsonl", frames)
    return result


def global_seed(explicit: int | None) -> int:
    """Resolve a seed: explicit flag, else the GIL_SEED env var, else 0."""
    if explicit is not None:
        return explicit
    env = os.environ.get("GIL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as err:
            raise ValueError(f"GIL_SEED must be an integer, got {env!r}") from err
    return 0
