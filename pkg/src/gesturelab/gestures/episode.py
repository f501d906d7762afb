"""Episode segmentation and evidence accumulation over hand-frame streams.

An episode spans hand appearance to disappearance. Inside it, static poses
are classified while the palm rests in the workspace-center sphere, and
excursions out of that sphere (strokes) are classified as dynamic gestures;
every classification whose top probability passes the evidence threshold is
recorded, and the episode's gesture vector is the element-wise maximum of
the recorded vectors.
"""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..actions import ActionType, MetricParams
from ..exceptions import SchemaMismatch
from .classify import GestureLibrary, classify_dynamic, classify_static
from .skeleton import HandSkeleton, STATIC_TEMPLATES, extract_static_features, synth_hand
from .trajectory import RESAMPLE_HZ, SWIPE_TEMPLATES, Trajectory, resample, synth_swipe

EVIDENCE_THRESHOLD = 0.9
CENTER_RADIUS = 50.0  # mm sphere around the workspace center
REPLAY_FPS = 50.0


@dataclass
class EpisodeBuffer:
    """Single-episode evidence store: frames plus triggered detections."""

    n_classes: int
    e_t: float = EVIDENCE_THRESHOLD
    max_frames: int | None = None
    visible: bool = False
    frames: deque = field(default_factory=deque)
    detections: list = field(default_factory=list)

    def __post_init__(self):
        self.frames = deque(self.frames, maxlen=self.max_frames)

    def push_frame(self, frame: HandSkeleton) -> None:
        self.visible = bool(frame.visible)
        if frame.visible:
            self.frames.append(frame)
        else:
            # hand disappearance ends the episode; the frame window is stale
            self.frames.clear()

    def push_detection(self, probs) -> bool:
        """Record a length-G probability vector iff it passes the threshold."""
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (self.n_classes,):
            raise SchemaMismatch(
                f"detection length {probs.shape}, expected ({self.n_classes},)"
            )
        if probs.max() >= self.e_t:
            self.detections.append(probs)
            return True
        return False

    def accumulate(self) -> np.ndarray:
        return accumulate(self)

    def reset(self) -> None:
        self.frames.clear()
        self.detections.clear()
        self.visible = False


def accumulate(buffer: EpisodeBuffer) -> np.ndarray:
    """Element-wise maximum over triggered detections (Eq. 5 style)."""
    if not buffer.detections:
        return np.zeros(buffer.n_classes)
    return np.maximum.reduce([np.asarray(d, float) for d in buffer.detections])


def detect_stroke(frames, center_radius: float = CENTER_RADIUS, center=(0.0, 0.0, 0.0)):
    """Maximal frame runs where the visible palm is outside the center sphere.

    Returns (start, stop) index pairs, stop exclusive. A stroke ends when
    the palm re-enters the sphere or the hand disappears; motion inside the
    sphere never contributes a segment.
    """
    center = np.asarray(center, dtype=float)
    segments = []
    start = None
    for i, fr in enumerate(frames):
        outside = fr.visible and np.linalg.norm(
            np.asarray(fr.palm_center, float) - center
        ) > center_radius
        if outside and start is None:
            start = i
        elif not outside and start is not None:
            segments.append((start, i))
            start = None
    if start is not None:
        segments.append((start, len(frames)))
    return segments


def extract_metrics(frames, ta: ActionType) -> MetricParams:
    """Action parameters read from the hand, with defaults when data lacks.

    Pour's tilt angle comes from the median thumb-index fingertip distance,
    mapped linearly from [20, 120] mm onto [10, 180] degrees and clamped.
    """
    if ta is not ActionType.POUR:
        return MetricParams.defaults_for(ta)
    gaps = [
        float(np.linalg.norm(np.asarray(fr.fingertips[0]) - np.asarray(fr.fingertips[1])))
        for fr in frames
        if fr.visible
    ]
    if not gaps:
        return MetricParams.defaults_for(ta)
    d = float(np.median(gaps))
    angle = 10.0 + (d - 20.0) / 100.0 * 170.0
    return MetricParams(angle_deg=float(np.clip(angle, 10.0, 180.0)))


# ------------------------------------------------------------------ replays


def make_replay(sequence, seed=None, noise_mm: float = 5.0, fps: float = REPLAY_FPS):
    """Synthesize an episode's frame stream from gesture class names.

    Static classes hold a noisy template at the workspace center for a few
    frames; dynamic classes move the palm along the swipe path (the hand in
    a fist) out of the center sphere. A final invisible frame closes the
    episode.
    """
    rng = np.random.default_rng(seed)
    frames: list[HandSkeleton] = []
    t = 0.0
    dt = 1.0 / fps
    for name in sequence:
        if name in STATIC_TEMPLATES:
            for _ in range(5):
                h = synth_hand(name, rng, noise_mm)
                frames.append(
                    HandSkeleton(h.palm_center, h.fingertips, h.bone_dirs, timestamp=t)
                )
                t += dt
        elif name in SWIPE_TEMPLATES:
            # the stroke proper: launched just past the center sphere so no
            # transit frame is mistaken for a held static pose
            offset = (CENTER_RADIUS + 20.0) * SWIPE_TEMPLATES[name]
            path = synth_swipe(name, rng, noise_mm)
            n = int(round(path.duration * fps)) + 1
            times = np.arange(n) / fps
            pos = offset + np.column_stack(
                [np.interp(times, path.times, path.points[:, k]) for k in range(3)]
            )
            for p in pos:
                h = synth_hand("five", rng, noise_mm)
                frames.append(
                    HandSkeleton(
                        palm_center=h.palm_center + p,
                        fingertips=h.fingertips + p,
                        bone_dirs=h.bone_dirs,
                        timestamp=t,
                    )
                )
                t += dt
        else:
            raise SchemaMismatch(f"unknown gesture class {name!r}")
    last = frames[-1] if frames else synth_hand("grab", rng, 0.0)
    frames.append(
        HandSkeleton(last.palm_center, last.fingertips, last.bone_dirs, t, visible=False)
    )
    return frames


def save_replay(path, frames) -> None:
    with open(path, "w") as fh:
        for fr in frames:
            fh.write(json.dumps(fr.to_dict(), separators=(",", ":")) + "\n")


def load_replay(path) -> list[HandSkeleton]:
    frames = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                frames.append(HandSkeleton.from_dict(json.loads(line)))
            except (KeyError, ValueError, TypeError) as err:
                raise SchemaMismatch(f"malformed replay line: {err}") from err
    return frames


# ------------------------------------------------------------- episode loop


def run_episode(
    frames,
    lib: GestureLibrary,
    e_t: float = EVIDENCE_THRESHOLD,
    center_radius: float = CENTER_RADIUS,
):
    """Classify one episode's frames into a gesture vector plus a trace.

    Returns (gesture_vector, trace) where trace rows are (time, length-G
    probability vector): one row per center-zone frame (static probabilities
    in the static class slots) and one per completed stroke (dynamic
    probabilities in the dynamic slots).
    """
    G = len(lib)
    buffer = EpisodeBuffer(n_classes=G, e_t=e_t)
    static_idx = [lib.index(c.name) for c in lib.static_classes]
    dynamic_idx = [lib.index(c.name) for c in lib.dynamic_classes]
    trace = []

    frames = list(frames)
    for fr in frames:
        buffer.push_frame(fr)
        if not fr.visible:
            continue
        if np.linalg.norm(np.asarray(fr.palm_center, float)) <= center_radius:
            probs = classify_static(extract_static_features(fr), lib)
            vec = np.zeros(G)
            vec[static_idx] = probs
            buffer.push_detection(vec)
            trace.append((float(fr.timestamp), vec))

    if dynamic_idx:
        rate = _frame_rate(frames)
        for start, stop in detect_stroke(frames, center_radius):
            if stop - start < 2:
                continue
            pts = np.asarray([frames[i].palm_center for i in range(start, stop)])
            traj = Trajectory(points=pts, rate=rate)
            if rate >= RESAMPLE_HZ:
                traj = resample(traj)
            probs = classify_dynamic(traj, lib)
            vec = np.zeros(G)
            vec[dynamic_idx] = probs
            buffer.push_detection(vec)
            trace.append((float(frames[stop - 1].timestamp), vec))

    return buffer.accumulate(), trace


def _frame_rate(frames) -> float:
    times = [fr.timestamp for fr in frames if fr.visible]
    if len(times) < 2:
        return REPLAY_FPS
    dt = float(np.median(np.diff(times)))
    return 1.0 / dt if dt > 0 else REPLAY_FPS


def save_trace(path, trace, class_names) -> None:
    """CSV export of classification events: time plus per-class probability."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time"] + [f"p_{n}" for n in class_names])
        for t, probs in trace:
            writer.writerow([f"{t:.4f}"] + [f"{p:.6f}" for p in probs])
