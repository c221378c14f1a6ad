"""Multi-task output schema, raw-vector decoding and landmark aspect ratios.

The network emits a flat 209-element vector laid out in this order:

    ======== ===== ==========
    field    size  activation
    ======== ===== ==========
    landmarks 196  none
    eye_viz     2  sigmoid
    eye_open    2  sigmoid
    mouth       3  softmax
    head        3  none
    action      3  softmax
    ======== ===== ==========
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateEye, DegenerateMouth, NonFinite, WrongLength

NUM_LANDMARKS = 98
OUTPUT_SIZE = 209

# (name, start, stop) slices into the raw output vector
LAYOUT = {
    "landmarks": slice(0, 196),
    "eye_viz": slice(196, 198),
    "eye_open": slice(198, 200),
    "mouth": slice(200, 203),
    "head": slice(203, 206),
    "action": slice(206, 209),
}

MOUTH_CLASSES = ("closed", "semi_open", "open")
ACTION_CLASSES = ("normal", "phone", "smoking")

HALF_PI = math.pi / 2
_LOGIT_EPS = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FaceIndicators:
    """Decoded per-face outputs of the multi-task network.

    ``landmarks`` is a (98, 2) array normalized to the face ROI. Mouth and
    action are probability simplices; ``head`` is (yaw, pitch, roll) in
    radians. ``clamped`` records that decoding had to clip landmarks or
    angles back into range.
    """

    landmarks: np.ndarray
    eye_viz: np.ndarray
    eye_open: np.ndarray
    mouth: np.ndarray
    head: np.ndarray
    action: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        for name, shape in (("landmarks", (NUM_LANDMARKS, 2)), ("eye_viz", (2,)),
                            ("eye_open", (2,)), ("mouth", (3,)), ("head", (3,)),
                            ("action", (3,))):
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise WrongLength(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)
        if np.any(self.landmarks < 0) or np.any(self.landmarks > 1):
            raise ValueError("landmark coordinates must lie in [0, 1]")
        for name in ("eye_viz", "eye_open"):
            v = getattr(self, name)
            if np.any(v < 0) or np.any(v > 1):
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("mouth", "action"):
            p = getattr(self, name)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
                raise ValueError(f"{name} must be a probability simplex")
        if np.any(np.abs(self.head) > HALF_PI):
            raise ValueError("head angles must lie in [-pi/2, pi/2]")

    @property
    def mouth_class(self) -> int:
        return int(np.argmax(self.mouth))

    @property
    def action_class(self) -> int:
        return int(np.argmax(self.action))

    @property
    def yaw(self) -> float:
        return float(self.head[0])

    @property
    def pitch(self) -> float:
        return float(self.head[1])

    @property
    def roll(self) -> float:
        return float(self.head[2])


@dataclass(frozen=True)
class RoiBox:
    """Face region in image pixels (top-left corner plus extent)."""

    x: float
    y: float
    w: float
    h: float
    score: float = 1.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"RoiBox extent must be positive, got w={self.w} h={self.h}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"RoiBox score must be in [0, 1], got {self.score}")

    def corners(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.x + self.w, self.y + self.h)

    @classmethod
    def from_corners(cls, x1, y1, x2, y2, score=1.0) -> "RoiBox":
        return cls(float(x1), float(y1), float(x2 - x1), float(y2 - y1), float(score))


@dataclass(frozen=True)
class RegionIds:
    """Landmark indices bounding one eye or the mouth.

    ``corners`` is the horizontal pair; each entry of ``verticals`` is a
    (top, bottom) pair.
    """

    corners: tuple[int, int]
    verticals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        corners = tuple(int(i) for i in self.corners)
        verticals = tuple(tuple(int(i) for i in pair) for pair in self.verticals)
        object.__setattr__(self, "corners", corners)
        object.__setattr__(self, "verticals", verticals)
        if len(corners) != 2:
            raise ValueError("corners must be exactly one index pair")
        if not verticals or any(len(p) != 2 for p in verticals):
            raise ValueError("need at least one vertical (top, bottom) pair")
        flat = list(corners) + [i for p in verticals for i in p]
        if any(i < 0 or i >= NUM_LANDMARKS for i in flat):
            raise ValueError(f"landmark index out of range [0, {NUM_LANDMARKS - 1}]")
        if len(set(flat)) != len(flat):
            raise ValueError("duplicate landmark index within a region")

    @property
    def ids(self) -> list[int]:
        return list(self.corners) + [i for p in self.verticals for i in p]


@dataclass(frozen=True)
class LandmarkSchema:
    """Index layout of the 98-point landmark set (WFLW convention by default)."""

    left_eye: RegionIds = field(default_factory=lambda: RegionIds(
        (60, 64), ((61, 67), (62, 66), (63, 65))))
    right_eye: RegionIds = field(default_factory=lambda: RegionIds(
        (68, 72), ((69, 75), (70, 74), (71, 73))))
    mouth: RegionIds = field(default_factory=lambda: RegionIds(
        (88, 92), ((89, 95), (90, 94), (91, 93))))
    iod: tuple[int, int] = (60, 72)

    def __post_init__(self):
        iod = tuple(int(i) for i in self.iod)
        object.__setattr__(self, "iod", iod)
        if len(iod) != 2 or iod[0] == iod[1] or not all(0 <= i < NUM_LANDMARKS for i in iod):
            raise ValueError("iod must be two distinct landmark indices")


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def decode_output_vector(raw, activations_applied: bool = False) -> FaceIndicators:
    """Split a raw 209-vector into a :class:`FaceIndicators`.

    With ``activations_applied=False`` the eye fields go through a sigmoid
    and mouth/action through a softmax. Landmarks and head angles are
    clamped into range and the result is flagged when that happens.
    """
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if raw.size != OUTPUT_SIZE:
        raise WrongLength(f"expected {OUTPUT_SIZE} elements, got {raw.size}")
    if not np.all(np.isfinite(raw)):
        raise NonFinite("raw output contains NaN or Inf")

    landmarks = raw[LAYOUT["landmarks"]].reshape(NUM_LANDMARKS, 2)
    eye_viz = raw[LAYOUT["eye_viz"]]
    eye_open = raw[LAYOUT["eye_open"]]
    mouth = raw[LAYOUT["mouth"]]
    head = raw[LAYOUT["head"]]
    action = raw[LAYOUT["action"]]

    if not activations_applied:
        eye_viz = sigmoid(eye_viz)
        eye_open = sigmoid(eye_open)
        mouth = softmax(mouth)
        action = softmax(action)
    else:
        eye_viz = np.clip(eye_viz, 0.0, 1.0)
        eye_open = np.clip(eye_open, 0.0, 1.0)
        mouth = _renormalize(mouth)
        action = _renormalize(action)

    clamped = bool(np.any(landmarks < 0) or np.any(landmarks > 1)
                   or np.any(np.abs(head) > HALF_PI))
    return FaceIndicators(
        landmarks=np.clip(landmarks, 0.0, 1.0),
        eye_viz=eye_viz,
        eye_open=eye_open,
        mouth=mouth,
        head=np.clip(head, -HALF_PI, HALF_PI),
        action=action,
        clamped=clamped,
    )


def _renormalize(p):
    p = np.clip(p, 0.0, None)
    s = p.sum()
    if s <= 0:
        return np.full(p.shape, 1.0 / p.size)
    return p / s


def encode_output_vector(ind: FaceIndicators, apply_inverse: bool = True) -> np.ndarray:
    """Inverse of :func:`decode_output_vector`.

    With ``apply_inverse`` the activated fields are mapped back to logits
    (logit for sigmoid outputs, log-probabilities for the simplices).
    """
    parts = [ind.landmarks.ravel()]
    if apply_inverse:
        for v in (ind.eye_viz, ind.eye_open):
            v = np.clip(v, _LOGIT_EPS, 1 - _LOGIT_EPS)
            parts.append(np.log(v) - np.log1p(-v))
        parts.append(np.log(np.clip(ind.mouth, _LOGIT_EPS, None)))
        parts.append(ind.head)
        parts.append(np.log(np.clip(ind.action, _LOGIT_EPS, None)))
    else:
        parts.extend([ind.eye_viz, ind.eye_open, ind.mouth, ind.head, ind.action])
    return np.concatenate(parts)


def _aspect_ratio(landmarks, region: RegionIds, eps: float, exc) -> float:
    pts = np.asarray(landmarks, dtype=np.float64)
    a, b = region.corners
    width = float(np.linalg.norm(pts[a] - pts[b]))
    if width <= eps:
        raise exc(f"horizontal extent {width:g} <= {eps:g}")
    heights = [np.linalg.norm(pts[t] - pts[u]) for t, u in region.verticals]
    return float(np.mean(heights)) / width


def compute_ear(landmarks, eye: RegionIds, eps: float = 1e-6) -> float:
    """Eye aspect ratio: mean vertical opening over corner-to-corner width."""
    return _aspect_ratio(landmarks, eye, eps, DegenerateEye)


def compute_mar(landmarks, mouth: RegionIds, eps: float = 1e-6) -> float:
    return _aspect_ratio(landmarks, mouth, eps, DegenerateMouth)


def denormalize_landmarks(indicators: FaceIndicators | np.ndarray, roi: RoiBox) -> np.ndarray:
    pts = indicators.landmarks if isinstance(indicators, FaceIndicators) else np.asarray(indicators)
    out = np.empty_like(pts, dtype=np.float64)
    out[:, 0] = roi.x + pts[:, 0] * roi.w
    out[:, 1] = roi.y + pts[:, 1] * roi.h
    return out


def one_hot(index: int, size: int = 3) -> np.ndarray:
    v = np.zeros(size)
    v[int(index)] = 1.0
    return v
