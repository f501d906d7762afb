"""Palm trajectories: resampling, DTW alignment cost, swipe synthesis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import TooShort, UnknownClass

RESAMPLE_HZ = 20.0
SWIPE_LENGTH_MM = 300.0
SWIPE_DURATION_S = 0.6

# displacement direction of each dynamic class template
SWIPE_TEMPLATES: dict[str, np.ndarray] = {
    "swipe_up": np.array([0.0, 0.0, 1.0]),
    "swipe_down": np.array([0.0, 0.0, -1.0]),
    "swipe_left": np.array([-1.0, 0.0, 0.0]),
    "swipe_right": np.array([1.0, 0.0, 0.0]),
}


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled palm positions (mm)."""

    points: np.ndarray  # (n, 3)
    rate: float  # Hz

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 3:
            raise TooShort("a trajectory needs at least two 3-d samples")
        if not np.all(np.isfinite(pts)):
            raise TooShort("trajectory coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def duration(self) -> float:
        return (len(self) - 1) / self.rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.rate


def resample(t: Trajectory, f_target: float = RESAMPLE_HZ) -> Trajectory:
    """Linear-interpolation resampling onto a uniform f_target grid.

    The grid starts at the first sample; when the duration is a multiple of
    the target step (the synthetic case) the final sample is hit exactly.
    """
    if len(t) < 2:
        raise TooShort("cannot resample fewer than two samples")
    if t.rate < f_target:
        raise ValueError(f"input rate {t.rate} Hz below target {f_target} Hz")
    n_new = int(np.floor(t.duration * f_target + 1e-9)) + 1
    new_times = np.arange(n_new) / f_target
    pts = np.column_stack(
        [np.interp(new_times, t.times, t.points[:, k]) for k in range(3)]
    )
    return Trajectory(points=pts, rate=f_target)


def dtw_distance(a, b) -> float:
    """Symmetric DTW alignment cost, normalized by the summed lengths.

    Local cost is the Euclidean distance between samples; diagonal steps
    weigh their local cost twice (symmetric step pattern), so the optimal
    cost divided by (n + m) is comparable across lengths and is zero for
    any uniform duplication of the same path.
    """
    pa = np.asarray(getattr(a, "points", a), dtype=float)
    pb = np.asarray(getattr(b, "points", b), dtype=float)
    n, m = pa.shape[0], pb.shape[0]
    cost = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2)

    D = np.empty((n, m))
    D[0, 0] = 2.0 * cost[0, 0]
    for i in range(1, n):
        D[i, 0] = D[i - 1, 0] + cost[i, 0]
    for j in range(1, m):
        D[0, j] = D[0, j - 1] + cost[0, j]
    for i in range(1, n):
        row = cost[i]
        for j in range(1, m):
            D[i, j] = min(
                D[i - 1, j] + row[j],
                D[i, j - 1] + row[j],
                D[i - 1, j - 1] + 2.0 * row[j],
            )
    return float(D[n - 1, m - 1] / (n + m))


def synth_swipe(name: str, seed=None, noise_mm: float = 0.0) -> Trajectory:
    """Sample a swipe: 300 mm straight segment plus iid positional noise."""
    if name not in SWIPE_TEMPLATES:
        raise UnknownClass(f"no swipe template named {name!r}")
    n = int(round(SWIPE_DURATION_S * RESAMPLE_HZ)) + 1
    phase = np.linspace(0.0, 1.0, n)[:, None]
    pts = phase * (SWIPE_LENGTH_MM * SWIPE_TEMPLATES[name])[None, :]
    if noise_mm:
        rng = np.random.default_rng(seed)
        pts = pts + rng.normal(0.0, noise_mm, pts.shape)
    return Trajectory(points=pts, rate=RESAMPLE_HZ)
