"""Hand skeletons, canonical pose templates, and static feature extraction.

A skeleton carries 23 unit direction vectors: palm normal, palm direction,
wrist direction, then metacarpal/proximal/intermediate/distal per finger in
thumb..pinky order. The 57 static features are 42 joint angles followed by
15 fingertip distances (5 to the palm, 10 pairwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateSkeleton, UnknownClass

N_FINGERS = 5
N_BONE_DIRS = 3 + 4 * N_FINGERS  # palm normal/direction, wrist, 4 per finger
N_STATIC_FEATURES = 57
FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")

# bone lengths (mm): metacarpal, proximal, intermediate, distal
_FINGER_BONES = (60.0, 40.0, 25.0, 20.0)
_THUMB_BONES = (45.0, 35.0, 30.0, 25.0)
# metacarpal base points on the palm, mm from palm center
_FINGER_BASES = np.array(
    [
        [-32.0, -2.0, 0.0],
        [-18.0, 8.0, 0.0],
        [0.0, 10.0, 0.0],
        [17.0, 8.0, 0.0],
        [32.0, 4.0, 0.0],
    ]
)


@dataclass(frozen=True)
class HandSkeleton:
    """One tracked hand frame in workspace coordinates (mm)."""

    palm_center: np.ndarray
    fingertips: np.ndarray  # (5, 3)
    bone_dirs: np.ndarray  # (23, 3), unit
    timestamp: float = 0.0
    visible: bool = True

    @property
    def palm_normal(self) -> np.ndarray:
        return self.bone_dirs[0]

    @property
    def palm_direction(self) -> np.ndarray:
        return self.bone_dirs[1]

    @property
    def wrist_direction(self) -> np.ndarray:
        return self.bone_dirs[2]

    def finger_dir(self, finger: int, bone: int) -> np.ndarray:
        """Direction of one finger bone; bone 0..3 = metacarpal..distal."""
        return self.bone_dirs[3 + 4 * finger + bone]

    def to_dict(self) -> dict:
        return {
            "t": float(self.timestamp),
            "palm": [round(float(v), 4) for v in self.palm_center],
            "fingertips": [[round(float(v), 4) for v in tip] for tip in self.fingertips],
            "bone_dirs": [[round(float(v), 6) for v in d] for d in self.bone_dirs],
            "visible": bool(self.visible),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HandSkeleton":
        return cls(
            palm_center=np.asarray(d["palm"], dtype=float),
            fingertips=np.asarray(d["fingertips"], dtype=float),
            bone_dirs=np.asarray(d["bone_dirs"], dtype=float),
            timestamp=float(d["t"]),
            visible=bool(d.get("visible", True)),
        )


# ---------------------------------------------------------------- templates


@dataclass(frozen=True)
class _FingerPose:
    curl: float  # 0 = extended, 1 = fully curled into the palm
    splay_deg: float = 0.0  # rotation of the whole finger about the palm normal
    pitch_deg: float = 0.0  # lift of the extended finger out of the palm plane


def _rotate_about(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * (axis @ v) * (1.0 - c)


def _finger_dirs(pose: _FingerPose) -> np.ndarray:
    """Four bone directions for one finger of the canonical flat hand.

    The finger lies along +y; curling rotates successive bones about the +x
    axis (toward -z, into the palm); splay and pitch re-orient the whole
    finger afterwards.
    """
    # per-bone curl angles at full curl, radians toward the palm
    full = np.radians([15.0, 95.0, 175.0, 230.0])
    dirs = []
    for bone_angle in full:
        a = pose.curl * bone_angle
        d = np.array([0.0, np.cos(a), -np.sin(a)])
        d = _rotate_about(d, np.array([1.0, 0.0, 0.0]), -np.radians(pose.pitch_deg))
        d = _rotate_about(d, np.array([0.0, 0.0, 1.0]), -np.radians(pose.splay_deg))
        dirs.append(d)
    return np.asarray(dirs)


# name -> per-finger pose, thumb..pinky
STATIC_TEMPLATES: dict[str, tuple[_FingerPose, ...]] = {
    "five": (
        _FingerPose(0.0, 55.0),
        _FingerPose(0.0, 12.0),
        _FingerPose(0.0, 0.0),
        _FingerPose(0.0, -12.0),
        _FingerPose(0.0, -25.0),
    ),
    "four": (
        _FingerPose(0.9, 30.0),
        _FingerPose(0.0, 12.0),
        _FingerPose(0.0, 0.0),
        _FingerPose(0.0, -12.0),
        _FingerPose(0.0, -25.0),
    ),
    "three": (
        _FingerPose(0.9, 30.0),
        _FingerPose(0.0, 10.0),
        _FingerPose(0.0, 0.0),
        _FingerPose(0.0, -10.0),
        _FingerPose(1.0, -20.0),
    ),
    "two": (
        _FingerPose(0.9, 30.0),
        _FingerPose(0.0, 10.0),
        _FingerPose(0.0, -5.0),
        _FingerPose(1.0, -15.0),
        _FingerPose(1.0, -20.0),
    ),
    "point": (
        _FingerPose(0.75, 35.0),
        _FingerPose(0.0, 0.0),
        _FingerPose(1.0, 0.0),
        _FingerPose(1.0, -10.0),
        _FingerPose(1.0, -20.0),
    ),
    "grab": (
        _FingerPose(0.8, 40.0),
        _FingerPose(0.95, 5.0),
        _FingerPose(0.95, 0.0),
        _FingerPose(0.95, -5.0),
        _FingerPose(0.95, -12.0),
    ),
    "pinch": (
        _FingerPose(0.35, 60.0, 25.0),
        _FingerPose(0.5, 8.0),
        _FingerPose(0.9, 0.0),
        _FingerPose(0.9, -8.0),
        _FingerPose(0.9, -18.0),
    ),
    "thumbs_up": (
        _FingerPose(0.0, 80.0, 35.0),
        _FingerPose(0.95, 5.0),
        _FingerPose(0.95, 0.0),
        _FingerPose(0.95, -5.0),
        _FingerPose(0.95, -12.0),
    ),
}


def _template_joints(name: str) -> tuple[np.ndarray, np.ndarray]:
    """Joint positions (5 fingers x 5 joints x 3) and palm anchor points."""
    if name not in STATIC_TEMPLATES:
        raise UnknownClass(f"no static template named {name!r}")
    joints = np.zeros((N_FINGERS, 5, 3))
    for f, pose in enumerate(STATIC_TEMPLATES[name]):
        bones = _THUMB_BONES if f == 0 else _FINGER_BONES
        dirs = _finger_dirs(pose)
        joints[f, 0] = _FINGER_BASES[f]
        for k in range(4):
            joints[f, k + 1] = joints[f, k] + bones[k] * dirs[k]
    # virtual points fixing the palm frame: normal, direction, wrist
    anchors = np.array([[0.0, 0.0, 40.0], [0.0, 40.0, 0.0], [0.0, -40.0, 0.0]])
    return joints, anchors


def synth_hand(name: str, seed=None, noise_mm: float = 0.0) -> HandSkeleton:
    """Sample a skeleton for one static class: template + positional noise.

    Every joint and anchor point is perturbed independently by zero-mean
    Gaussian noise of scale noise_mm per coordinate, then directions are
    re-derived from the perturbed points, so fingertip coordinates carry
    exactly the requested noise scale.
    """
    joints, anchors = _template_joints(name)
    rng = np.random.default_rng(seed)
    palm = np.zeros(3)
    if noise_mm:
        joints = joints + rng.normal(0.0, noise_mm, joints.shape)
        anchors = anchors + rng.normal(0.0, noise_mm, anchors.shape)
        palm = palm + rng.normal(0.0, noise_mm, 3)

    def unit(v: np.ndarray) -> np.ndarray:
        n = np.linalg.norm(v)
        if n < 1e-9:
            raise DegenerateSkeleton("zero-length bone direction")
        return v / n

    dirs = [unit(a - palm) for a in anchors]
    for f in range(N_FINGERS):
        for k in range(4):
            dirs.append(unit(joints[f, k + 1] - joints[f, k]))
    return HandSkeleton(
        palm_center=palm,
        fingertips=joints[:, 4].copy(),
        bone_dirs=np.asarray(dirs),
    )


# ----------------------------------------------------------- feature vector

_TIP_PAIRS = [(i, j) for i in range(N_FINGERS) for j in range(i + 1, N_FINGERS)]


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.arccos(np.clip(u @ v, -1.0, 1.0)))


def extract_static_features(h: HandSkeleton) -> np.ndarray:
    """57 features: 42 angles (radians) then 15 distances (mm), fixed order.

    Angle blocks: per finger [flexion x3, palm-direction-to-metacarpal,
    pitch, yaw] (30), adjacent-finger abductions (4), palm-normal-to-distal
    (5), wrist (2), thumb opposition (1). A hand whose palm normal and palm
    direction are parallel has no defined yaw plane; its yaws are 0.
    """
    dirs = np.asarray(h.bone_dirs, dtype=float)
    if dirs.shape != (N_BONE_DIRS, 3):
        raise DegenerateSkeleton(f"expected {N_BONE_DIRS} bone directions")
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(norms < 1e-9):
        raise DegenerateSkeleton("zero-length bone direction")
    dirs = dirs / norms[:, None]

    normal, direction, wrist = dirs[0], dirs[1], dirs[2]
    side = np.cross(normal, direction)
    side_norm = np.linalg.norm(side)
    side = side / side_norm if side_norm > 1e-9 else None
    bone = lambda f, k: dirs[3 + 4 * f + k]

    angles = []
    for f in range(N_FINGERS):
        angles += [
            _angle(bone(f, 0), bone(f, 1)),
            _angle(bone(f, 1), bone(f, 2)),
            _angle(bone(f, 2), bone(f, 3)),
            _angle(direction, bone(f, 0)),
            _angle(normal, bone(f, 1)),
            _angle(side, bone(f, 1)) if side is not None else 0.0,
        ]
    for f in range(N_FINGERS - 1):
        angles.append(_angle(bone(f, 1), bone(f + 1, 1)))
    for f in range(N_FINGERS):
        angles.append(_angle(normal, bone(f, 3)))
    angles.append(_angle(normal, wrist))
    angles.append(_angle(direction, wrist))
    angles.append(_angle(bone(0, 3), bone(1, 1)))

    tips = np.asarray(h.fingertips, dtype=float)
    palm = np.asarray(h.palm_center, dtype=float)
    dists = [float(np.linalg.norm(tips[f] - palm)) for f in range(N_FINGERS)]
    dists += [float(np.linalg.norm(tips[i] - tips[j])) for i, j in _TIP_PAIRS]

    out = np.asarray(angles + dists)
    assert out.shape == (N_STATIC_FEATURES,)
    return out
