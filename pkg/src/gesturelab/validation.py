"""Input-validation and RNG helpers used across the package."""

from __future__ import annotations

import os

import numpy as np

#: Environment variable consulted when a command is run without --seed.
SEED_ENV_VAR = "GIL_SEED"

Seed = int | np.random.SeedSequence | np.random.Generator


def as_rng(seed: Seed | None) -> np.random.Generator:
    """Return a numpy Generator for ``seed``.

    Accepts an int, a SeedSequence, an existing Generator (passed through),
    or None (fresh OS entropy).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: Seed | None, n: int) -> list[np.random.SeedSequence]:
    """Derive ``n`` independent child seeds from ``seed``, deterministically."""
    if isinstance(seed, np.random.Generator):
        raise TypeError("cannot spawn child seeds from a live Generator; pass an int")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return seq.spawn(n)


def record_seed(dataset_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for record ``index`` of a dataset, independent of generation order."""
    return np.random.SeedSequence(dataset_seed, spawn_key=(index,))


def env_seed(default: int = 0) -> int:
    """Global seed fallback from the environment, or ``default``."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


def check_vector(x, length: int, name: str = "x") -> np.ndarray:
    """Coerce to a float64 1-D array of exactly ``length`` finite entries."""
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr
