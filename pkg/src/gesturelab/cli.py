"""``gil`` command line: generate | train | grid | curve | episode.

Exit codes: 0 success, 1 usage error, 2 runtime failure (including
NoConfidentIntent from the episode pipeline). When --seed is omitted the
GIL_SEED environment variable supplies the global seed.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import harness
from .intentnet import MODELS


def _csv_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_models(text: str) -> list[str]:
    return list(MODELS) if text == "all" else _csv_list(text)


def _parse_levels(text: str) -> list[str]:
    return list(harness.LEVELS) if text == "all" else _csv_list(text)


def _parse_seeds(text: str | None, default: tuple[int, ...]) -> list[int]:
    if text is None:
        # an explicit GIL_SEED collapses the default multi-seed sweep
        if os.environ.get("GIL_SEED") is not None:
            return [harness.global_seed(None)]
        return list(default)
    return [int(part) for part in _csv_list(text)]


def _parse_focus(text: str) -> list[float]:
    parts = [float(p) for p in _csv_list(text)]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("focus must be x,y,z")
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gil",
        description="Gesture-to-intent lab: datasets, training grids, episodes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write one dataset file")
    gen.add_argument("--level", required=True, choices=harness.LEVELS)
    gen.add_argument("--n", type=int, required=True, help="number of records")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", default=None, help="output path (JSON Lines)")
    gen.add_argument("--threads", type=int, default=1)

    train = sub.add_parser("train", help="train intent heads + gesture library")
    train.add_argument("--level", default="D4", choices=harness.LEVELS)
    train.add_argument("--model", default="M5", choices=MODELS)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--train-size", type=int, default=harness.DEFAULT_TRAIN_SIZE)
    train.add_argument("--test-size", type=int, default=harness.DEFAULT_TEST_SIZE)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--dataset", default=None, help="existing dataset file to reuse")
    train.add_argument("--out", default="models")

    grid = sub.add_parser("grid", help="score a model x dataset x seed grid")
    grid.add_argument("--model", type=_parse_models, default=list(MODELS),
                      help="comma list or 'all'")
    grid.add_argument("--level", type=_parse_levels, default=list(harness.LEVELS),
                      help="comma list or 'all'")
    grid.add_argument("--seed", default=None, help="comma list of seeds")
    grid.add_argument("--train-size", type=int, default=harness.DEFAULT_TRAIN_SIZE)
    grid.add_argument("--test-size", type=int, default=harness.DEFAULT_TEST_SIZE)
    grid.add_argument("--epochs", type=int, default=None)
    grid.add_argument("--threads", type=int, default=1)
    grid.add_argument("--out", default="grid.csv")

    curve = sub.add_parser("curve", help="accuracy vs. training-set size")
    curve.add_argument("--level", default="D4", choices=harness.LEVELS)
    curve.add_argument("--model", default="M5", choices=MODELS)
    curve.add_argument("--counts", default=",".join(str(c) for c in harness.CURVE_COUNTS),
                       help="comma list of training sizes")
    curve.add_argument("--seed", default=None, help="comma list of seeds")
    curve.add_argument("--test-size", type=int, default=harness.DEFAULT_TEST_SIZE)
    curve.add_argument("--epochs", type=int, default=None)
    curve.add_argument("--threads", type=int, default=1)
    curve.add_argument("--out", default="curve.csv")

    ep = sub.add_parser("episode", help="frames -> gesture vector -> intent -> plan")
    ep.add_argument("--models", default="models", help="directory written by train")
    src = ep.add_mutually_exclusive_group(required=True)
    src.add_argument("--replay", default=None, help="replay JSONL file")
    src.add_argument("--gestures", type=_csv_list, default=None,
                     help="comma list of gesture class names to synthesize")
    ep.add_argument("--seed", type=int, default=None, help="replay synthesis seed")
    ep.add_argument("--scene-seed", type=int, default=0)
    ep.add_argument("--user", type=int, default=0)
    ep.add_argument("--target", type=int, default=None,
                    help="object slot the sampled focus centers on")
    ep.add_argument("--focus", type=_parse_focus, default=None,
                    help="explicit focus point x,y,z (grid units)")
    ep.add_argument("--threshold", type=float, default=0.3)
    ep.add_argument("--noise", type=float, default=5.0,
                    help="synthetic replay noise (mm)")
    ep.add_argument("--out", default=None, help="directory for episode artifacts")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "generate":
        seed = harness.global_seed(args.seed)
        out = args.out or f"dataset_{args.level}_seed{seed}.jsonl"
        harness.cmd_generate(args.level, args.n, seed, out, workers=args.threads)
    elif args.command == "train":
        harness.cmd_train(
            level=args.level,
            model=args.model,
            seed=harness.global_seed(args.seed),
            train_size=args.train_size,
            test_size=args.test_size,
            epochs=args.epochs,
            out=args.out,
            dataset_path=args.dataset,
        )
    elif args.command == "grid":
        harness.cmd_grid(
            models=args.model,
            levels=args.level,
            seeds=_parse_seeds(args.seed, (0, 1, 2)),
            train_size=args.train_size,
            test_size=args.test_size,
            epochs=args.epochs,
            out=args.out,
            threads=args.threads,
        )
    elif args.command == "curve":
        harness.cmd_learning_curve(
            counts=[int(c) for c in _csv_list(args.counts)],
            seeds=_parse_seeds(args.seed, (0, 1, 2)),
            level=args.level,
            model=args.model,
            test_size=args.test_size,
            epochs=args.epochs,
            out=args.out,
            threads=args.threads,
        )
    elif args.command == "episode":
        harness.cmd_episode(
            models=args.models,
            replay=args.replay,
            gestures=args.gestures,
            seed=harness.global_seed(args.seed),
            scene_seed=args.scene_seed,
            user=args.user,
            target=args.target,
            focus=args.focus,
            threshold=args.threshold,
            noise_mm=args.noise,
            out=args.out,
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _dispatch(args)
    except Exception as err:  # noqa: BLE001 - CLI boundary: report and signal failure
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
