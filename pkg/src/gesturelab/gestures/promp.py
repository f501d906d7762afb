"""Probabilistic motion primitives: Gaussian-basis weight distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InsufficientDemos
from .trajectory import RESAMPLE_HZ, Trajectory


def _basis_matrix(phase: np.ndarray, n_basis: int) -> np.ndarray:
    centers = np.linspace(0.0, 1.0, n_basis)
    width = centers[1] - centers[0] if n_basis > 1 else 1.0
    return np.exp(-((phase[:, None] - centers[None, :]) ** 2) / (2.0 * width**2))


@dataclass(frozen=True)
class ProMP:
    """Per-axis basis-weight distribution over demonstrations."""

    weight_means: np.ndarray  # (n_basis, 3)
    weight_vars: np.ndarray  # (n_basis, 3)
    mean_trajectory: Trajectory
    n_basis: int

    def to_dict(self) -> dict:
        return {
            "weight_means": self.weight_means.tolist(),
            "weight_vars": self.weight_vars.tolist(),
            "mean_trajectory": self.mean_trajectory.points.tolist(),
            "rate": self.mean_trajectory.rate,
            "n_basis": self.n_basis,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProMP":
        return cls(
            weight_means=np.asarray(d["weight_means"], dtype=float),
            weight_vars=np.asarray(d["weight_vars"], dtype=float),
            mean_trajectory=Trajectory(
                points=np.asarray(d["mean_trajectory"], dtype=float),
                rate=float(d["rate"]),
            ),
            n_basis=int(d["n_basis"]),
        )


def fit_promp(demos, n_basis: int = 25, ridge: float = 1e-10) -> ProMP:
    """Fit per-axis ridge regressions onto evenly spaced Gaussian bases.

    Each demo is projected on its own phase grid (0..1 over its samples);
    weight means and variances are taken across demos, and the mean
    trajectory is the basis expansion of the mean weights on the longest
    demo's grid. Regression is linear in the targets, so e.g. the mean
    trajectory of two parallel demos is their midline up to the (tiny,
    ridge-controlled) residual of representing the demos themselves.
    """
    demos = list(demos)
    if len(demos) < 2:
        raise InsufficientDemos(f"need at least 2 demos, got {len(demos)}")

    eye = np.eye(n_basis)
    weights = []
    for demo in demos:
        pts = demo.points
        phase = np.linspace(0.0, 1.0, pts.shape[0])
        phi = _basis_matrix(phase, n_basis)
        w = np.linalg.solve(phi.T @ phi + ridge * eye, phi.T @ pts)
        weights.append(w)
    weights = np.asarray(weights)  # (n_demos, n_basis, 3)

    mean_w = weights.mean(axis=0)
    var_w = weights.var(axis=0)
    n_ref = max(demo.points.shape[0] for demo in demos)
    phi_ref = _basis_matrix(np.linspace(0.0, 1.0, n_ref), n_basis)
    mean_traj = Trajectory(points=phi_ref @ mean_w, rate=RESAMPLE_HZ)
    return ProMP(
        weight_means=mean_w,
        weight_vars=var_w,
        mean_trajectory=mean_traj,
        n_basis=n_basis,
    )
