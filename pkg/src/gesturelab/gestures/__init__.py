"""Synthetic hand pipeline: skeletons, trajectories, classification, episodes."""

from .skeleton import (
    HandSkeleton,
    N_STATIC_FEATURES,
    STATIC_TEMPLATES,
    extract_static_features,
    synth_hand,
)
from .trajectory import (
    SWIPE_TEMPLATES,
    Trajectory,
    dtw_distance,
    resample,
    synth_swipe,
)
from .promp import ProMP, fit_promp
from .classify import (
    DEFAULT_CLASSES,
    GestureClass,
    GestureLibrary,
    classify_dynamic,
    classify_static,
    load_library,
    save_library,
    train_default_library,
    train_static_model,
)
from .episode import (
    CENTER_RADIUS,
    EVIDENCE_THRESHOLD,
    EpisodeBuffer,
    accumulate,
    detect_stroke,
    extract_metrics,
    load_replay,
    make_replay,
    run_episode,
    save_replay,
    save_trace,
)

__all__ = [
    "HandSkeleton",
    "N_STATIC_FEATURES",
    "STATIC_TEMPLATES",
    "extract_static_features",
    "synth_hand",
    "SWIPE_TEMPLATES",
    "Trajectory",
    "dtw_distance",
    "resample",
    "synth_swipe",
    "ProMP",
    "fit_promp",
    "DEFAULT_CLASSES",
    "GestureClass",
    "GestureLibrary",
    "classify_dynamic",
    "classify_static",
    "load_library",
    "save_library",
    "train_default_library",
    "train_static_model",
    "CENTER_RADIUS",
    "EVIDENCE_THRESHOLD",
    "EpisodeBuffer",
    "accumulate",
    "detect_stroke",
    "extract_metrics",
    "load_replay",
    "make_replay",
    "run_episode",
    "save_replay",
    "save_trace",
]
