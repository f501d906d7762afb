"""Gesture libraries: a static-pose classifier plus dynamic swipe exemplars.

Library order defines the gesture indices used everywhere else: the default
nine classes are grab, pinch, point, two, three, then the four swipes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import SchemaMismatch, UnknownClass, UntrainedModel
from ..vmlp import VariationalMLPClassifier
from .promp import ProMP, fit_promp
from .skeleton import extract_static_features, synth_hand
from .trajectory import Trajectory, dtw_distance, synth_swipe

DTW_TEMPERATURE = 25.0  # mm, in normalized alignment-cost units
STATIC_DISTANCE_SCALE_MM = 100.0


@dataclass(frozen=True)
class GestureClass:
    name: str
    kind: str  # "static" | "dynamic"

    def __post_init__(self):
        if self.kind not in ("static", "dynamic"):
            raise SchemaMismatch(f"gesture kind {self.kind!r}")


DEFAULT_CLASSES: tuple[GestureClass, ...] = (
    GestureClass("grab", "static"),
    GestureClass("pinch", "static"),
    GestureClass("point", "static"),
    GestureClass("two", "static"),
    GestureClass("three", "static"),
    GestureClass("swipe_up", "dynamic"),
    GestureClass("swipe_down", "dynamic"),
    GestureClass("swipe_left", "dynamic"),
    GestureClass("swipe_right", "dynamic"),
)


def scale_static_features(f: np.ndarray) -> np.ndarray:
    """Bring the 57 raw features to O(1): angles stay, mm distances shrink."""
    out = np.asarray(f, dtype=float).copy()
    out[..., 42:] /= STATIC_DISTANCE_SCALE_MM
    return out


@dataclass
class GestureLibrary:
    """Ordered gesture classes with their trained recognizers."""

    classes: tuple[GestureClass, ...] = DEFAULT_CLASSES
    static_model: VariationalMLPClassifier | None = None
    promps: dict[str, ProMP] = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise SchemaMismatch("duplicate gesture class names")

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def static_classes(self) -> list[GestureClass]:
        return [c for c in self.classes if c.kind == "static"]

    @property
    def dynamic_classes(self) -> list[GestureClass]:
        return [c for c in self.classes if c.kind == "dynamic"]

    def index(self, name: str) -> int:
        for i, c in enumerate(self.classes):
            if c.name == name:
                return i
        raise UnknownClass(f"{name!r} not in library")


def classify_static(features, lib: GestureLibrary) -> np.ndarray:
    """Posterior-predictive class probabilities over the static classes."""
    if lib.static_model is None:
        raise UntrainedModel("library has no trained static model")
    f = scale_static_features(np.asarray(features, dtype=float))
    if f.ndim == 1:
        f = f[None, :]
        return lib.static_model.predict_proba(f)[0]
    return lib.static_model.predict_proba(f)


def classify_dynamic(t: Trajectory, lib: GestureLibrary) -> np.ndarray:
    """Probabilities over dynamic classes: softmin of DTW distances.

    p_k is proportional to exp(-d_k / tau) where d_k is the normalized DTW
    distance to class k's mean trajectory.
    """
    dyn = lib.dynamic_classes
    if not dyn or any(c.name not in lib.promps for c in dyn):
        raise UntrainedModel("library has no fitted dynamic exemplars")
    d = np.array(
        [dtw_distance(t, lib.promps[c.name].mean_trajectory) for c in dyn]
    )
    logits = -d / DTW_TEMPERATURE
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


# ------------------------------------------------------------------ training


def train_static_model(
    class_names,
    seed: int = 0,
    n_per_class: int = 200,
    noise_mm: float = 10.0,
    epochs: int = 4000,
    batch_size: int | None = 256,
) -> VariationalMLPClassifier:
    """Fit the shared variational MLP on synthetic skeleton features."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for ci, name in enumerate(class_names):
        for _ in range(n_per_class):
            h = synth_hand(name, rng, noise_mm)
            X.append(extract_static_features(h))
            y.append(ci)
    X = scale_static_features(np.stack(X))
    clf = VariationalMLPClassifier(
        hidden_layers=1,
        hidden_width=25,
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=0.02,
        mc_samples=2,
        callback_every=250,
        n_posterior_samples=50,
        random_state=seed,
    )
    return clf.fit(np.asarray(X), np.asarray(y))


def train_default_library(
    seed: int = 0,
    n_per_class: int = 200,
    noise_mm: float = 10.0,
    n_demos: int = 8,
    n_basis: int = 25,
    classes: tuple[GestureClass, ...] = DEFAULT_CLASSES,
) -> GestureLibrary:
    """Build a fully trained library from synthetic data, deterministic in seed."""
    lib = GestureLibrary(classes=classes)
    static_names = [c.name for c in lib.static_classes]
    model = train_static_model(
        static_names, seed=seed, n_per_class=n_per_class, noise_mm=noise_mm
    )
    promps = {}
    for k, c in enumerate(lib.dynamic_classes):
        demos = [
            synth_swipe(c.name, seed=(seed, 7 + k, j), noise_mm=noise_mm)
            for j in range(n_demos)
        ]
        promps[c.name] = fit_promp(demos, n_basis=n_basis)
    lib.static_model = model
    lib.promps = promps
    return lib


# -------------------------------------------------------------- persistence


def save_library(lib: GestureLibrary, path) -> None:
    doc = {
        "classes": [{"name": c.name, "kind": c.kind} for c in lib.classes],
        "static_model": lib.static_model.to_json() if lib.static_model else None,
        "promps": {name: p.to_dict() for name, p in lib.promps.items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_library(path) -> GestureLibrary:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        classes = tuple(GestureClass(c["name"], c["kind"]) for c in doc["classes"])
        model = (
            VariationalMLPClassifier.from_json(doc["static_model"])
            if doc["static_model"]
            else None
        )
        promps = {name: ProMP.from_dict(d) for name, d in doc["promps"].items()}
    except (KeyError, TypeError) as err:
        raise SchemaMismatch(f"malformed library file: {err}") from err
    return GestureLibrary(classes=classes, static_model=model, promps=promps)
