"""Intent inference: feature assembly, classifier heads, masked joint readout.

Five feature configurations (M1..M5) grow from gesture-only input to the
full context vector. Two variational MLP heads are trained per model: one
over the 11 intent actions and one over 8 target slots (7 object slots plus
an explicit "no target" class). At inference time the heads' probabilities
are multiplied into a joint over (action, target) pairs, masked by the
intents actually valid in the scene, and the best pair is returned only when
the action head is confident enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import ActionType, Intent, MetricParams, N_ACTIONS, plannable_intents
from .datasetgen import Dataset, ObservationRecord
from .exceptions import EmptyInput, NoConfidentIntent, ShapeMismatch
from .usersim import G, TYPE_INDEX, U
from .vmlp import VariationalMLPClassifier
from .world import MAX_OBJECTS, Scene, distances_to_focus

N_OBJECT_CLASSES = MAX_OBJECTS + 1  # 7 slots + "no target"
NO_TARGET = MAX_OBJECTS
DISTANCE_SCALE = 10.0
CONFIDENCE_THRESHOLD = 0.3

MODELS = ("M1", "M2", "M3", "M4", "M5")


@dataclass(frozen=True)
class FeatureConfig:
    """Which context blocks feed the classifier, in fixed block order:
    gesture, distances, user, object states, object types."""

    model: str
    use_distances: bool
    use_user: bool
    use_scene: bool
    hidden_layers: int

    @staticmethod
    def for_model(name: str) -> "FeatureConfig":
        table = {
            "M1": (False, False, False, 1),
            "M2": (True, False, False, 2),
            "M3": (False, True, False, 2),
            "M4": (True, True, False, 2),
            "M5": (True, True, True, 2),
        }
        if name not in table:
            raise ShapeMismatch(f"unknown model {name!r}, expected one of {MODELS}")
        dist, user, scene, hidden = table[name]
        return FeatureConfig(name, dist, user, scene, hidden)

    @property
    def width(self) -> int:
        w = G
        if self.use_distances:
            w += MAX_OBJECTS
        if self.use_user:
            w += U
        if self.use_scene:
            w += MAX_OBJECTS + 3 * MAX_OBJECTS
        return w


def assemble_features(
    g, focus, scene: Scene, user: int, cfg: FeatureConfig
) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (G,):
        raise ShapeMismatch(f"gesture vector shape {g.shape}, expected ({G},)")
    blocks = [g]
    if cfg.use_distances:
        blocks.append(distances_to_focus(scene, np.asarray(focus, float)) / DISTANCE_SCALE)
    if cfg.use_user:
        onehot = np.zeros(U)
        onehot[int(user)] = 1.0
        blocks.append(onehot)
    if cfg.use_scene:
        states = np.zeros(MAX_OBJECTS)
        types = np.zeros(3 * MAX_OBJECTS)
        for obj in scene.objects:
            states[obj.id] = float(obj.state)
            types[3 * obj.id + TYPE_INDEX[obj.type]] = 1.0
        blocks.append(states)
        blocks.append(types)
    return np.concatenate(blocks)


def assemble_input(record: ObservationRecord, cfg: FeatureConfig) -> np.ndarray:
    return assemble_features(record.g, record.focus, record.scene, record.user, cfg)


def assemble_matrix(ds: Dataset, cfg: FeatureConfig):
    """Feature matrix plus action and target-slot label vectors."""
    X = np.stack([assemble_input(r, cfg) for r in ds.records])
    y_action = np.array([r.ta for r in ds.records])
    y_object = np.array([NO_TARGET if r.to == -1 else r.to for r in ds.records])
    return X, y_action, y_object


@dataclass(frozen=True)
class TrainSettings:
    """Optimizer budget; the defaults are the long full-batch schedule."""

    epochs: int = 30000
    batch_size: int | None = None
    learning_rate: float = 0.01
    hidden_width: int = 25
    mc_samples: int = 1
    n_init: int = 1
    callback_every: int = 2000
    validation_fraction: float = 0.1
    n_posterior_samples: int = 100

    @staticmethod
    def fast() -> "TrainSettings":
        """Minibatch schedule used by the evaluation harness: same learner,
        two-sample gradient estimates and three independent starts, which
        together keep every cell off the rare optimization plateaus."""
        return TrainSettings(
            epochs=20000,
            batch_size=256,
            learning_rate=0.02,
            mc_samples=2,
            n_init=3,
            callback_every=500,
            n_posterior_samples=50,
        )


def make_classifier(cfg: FeatureConfig, settings: TrainSettings, seed) -> VariationalMLPClassifier:
    return VariationalMLPClassifier(
        hidden_layers=cfg.hidden_layers,
        hidden_width=settings.hidden_width,
        epochs=settings.epochs,
        batch_size=settings.batch_size,
        learning_rate=settings.learning_rate,
        mc_samples=settings.mc_samples,
        n_init=settings.n_init,
        callback_every=settings.callback_every,
        validation_fraction=settings.validation_fraction,
        n_posterior_samples=settings.n_posterior_samples,
        random_state=seed,
    )


def train_heads(train: Dataset, cfg: FeatureConfig, settings: TrainSettings, seed: int):
    """Fit the action head and the target-slot head on one dataset."""
    X, y_action, y_object = assemble_matrix(train, cfg)
    action = make_classifier(cfg, settings, seed).fit(X, y_action)
    object_ = make_classifier(cfg, settings, seed + 1).fit(X, y_object)
    return action, object_


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean per-class recall over the classes present in y_true."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0:
        raise EmptyInput("no labels to score")
    if y_true.shape != y_pred.shape:
        raise ShapeMismatch(f"label shapes {y_true.shape} vs {y_pred.shape}")
    score = 0.0
    classes = np.unique(y_true)
    for c in classes:
        sel = y_true == c
        score += float(np.mean(y_pred[sel] == c))
    return score / len(classes)


def evaluate_heads(action_clf, object_clf, test: Dataset, cfg: FeatureConfig) -> dict:
    X, y_action, y_object = assemble_matrix(test, cfg)
    pa = action_clf.predict(X)
    po = object_clf.predict(X)
    return {
        "balanced_accuracy": balanced_accuracy(y_action, pa),
        "object_accuracy": float(np.mean(po == y_object)),
        "joint_accuracy": float(np.mean((pa == y_action) & (po == y_object))),
    }


def _full_proba(clf, X, n_classes: int) -> np.ndarray:
    """Probabilities re-indexed onto 0..n_classes-1 (unseen classes get 0)."""
    p = clf.predict_proba(X)
    out = np.zeros((X.shape[0], n_classes))
    for j, c in enumerate(clf.classes_):
        out[:, int(c)] = p[:, j]
    return out


def infer_intent(
    action_clf,
    object_clf,
    g,
    focus,
    scene: Scene,
    user: int,
    cfg: FeatureConfig,
    threshold: float = CONFIDENCE_THRESHOLD,
    metric: MetricParams | None = None,
) -> Intent:
    """Most probable plannable (action, target) pair, or NoConfidentIntent.

    The joint score of a pair is the product of the two heads' probabilities;
    pairs the planner cannot realize in the scene are masked out (the mask
    admits the recoverable put-into-closed-drawer case the behavior tree
    auto-opens). The winning pair is only accepted when the action head
    assigns its action at least `threshold`.
    """
    X = assemble_features(g, focus, scene, user, cfg)[None, :]
    pa = _full_proba(action_clf, X, N_ACTIONS)[0]
    po = _full_proba(object_clf, X, N_OBJECT_CLASSES)[0]

    best, best_score = None, 0.0
    for ta, to in plannable_intents(scene):
        slot = NO_TARGET if to is None else int(to)
        score = pa[int(ta)] * po[slot]
        if score > best_score:
            best, best_score = (int(ta), to), score
    if best is None or pa[best[0]] < threshold:
        raise NoConfidentIntent(
            f"no valid intent with action confidence >= {threshold}"
        )
    ta, to = best
    tm = metric if metric is not None else MetricParams.defaults_for(ActionType(ta))
    return Intent(ActionType(ta), to, tm)
