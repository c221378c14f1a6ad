"""SSD-style face detection post-processing: prior decoding and greedy NMS."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .indicators import RoiBox

FRAME_SIZE = (320, 240)  # detector input, width x height
VARIANCES = (0.1, 0.2)

# Prior layout of the 320x240 ultra-light face detector family.
MIN_BOXES = ((10, 16, 24), (32, 48), (64, 96), (128, 192, 256))
STRIDES = (8, 16, 32, 64)


@dataclass(frozen=True)
class PriorBox:
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError("prior extent must be positive")


@dataclass(frozen=True)
class Detection:
    """Corner-form box (normalized to the frame unless stated otherwise) plus score."""

    x1: float
    y1: float
    x2: float
    y2: float
    score: float

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def to_roi(self, frame_size=FRAME_SIZE) -> RoiBox:
        fw, fh = frame_size
        return RoiBox.from_corners(self.x1 * fw, self.y1 * fh, self.x2 * fw, self.y2 * fh,
                                   min(max(self.score, 0.0), 1.0))

    @classmethod
    def from_roi(cls, roi: RoiBox) -> "Detection":
        """Pixel-space detection (no normalization) from an ROI."""
        x1, y1, x2, y2 = roi.corners()
        return cls(x1, y1, x2, y2, roi.score)


def iou(a, b) -> float:
    """Intersection over union of two corner-form boxes (x1, y1, x2, y2)."""
    if isinstance(a, Detection):
        a = a.box
    if isinstance(b, Detection):
        b = b.box
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out


def make_priors(frame_size=FRAME_SIZE, min_boxes=MIN_BOXES, strides=STRIDES) -> np.ndarray:
    """Center-size priors (cx, cy, w, h), normalized, one row per anchor."""
    fw, fh = frame_size
    rows = []
    for sizes, stride in zip(min_boxes, strides):
        gw, gh = math.ceil(fw / stride), math.ceil(fh / stride)
        for j, i in itertools.product(range(gh), range(gw)):
            cx, cy = (i + 0.5) / (fw / stride), (j + 0.5) / (fh / stride)
            for m in sizes:
                rows.append((cx, cy, m / fw, m / fh))
    return np.clip(np.array(rows), 0.0, 1.0)


def decode_anchors(loc, conf, priors, variances=VARIANCES, score_threshold: float = 0.7):
    """Decode center-variance offsets against ``priors`` into corner-form detections.

    ``loc`` is (P, 4) as (dx, dy, dw, dh); ``conf`` holds one face score per
    prior. Boxes are clamped to [0, 1] and anything scoring below
    ``score_threshold`` is dropped.
    """
    loc = np.asarray(loc, dtype=np.float64).reshape(-1, 4)
    conf = np.asarray(conf, dtype=np.float64).ravel()
    pri = np.array([[p.cx, p.cy, p.w, p.h] if isinstance(p, PriorBox) else p for p in priors],
                   dtype=np.float64).reshape(-1, 4)
    if not (len(loc) == len(conf) == len(pri)):
        raise LengthMismatch(f"loc={len(loc)}, conf={len(conf)}, priors={len(pri)} must match")
    v0, v1 = variances
    cx = pri[:, 0] + loc[:, 0] * v0 * pri[:, 2]
    cy = pri[:, 1] + loc[:, 1] * v0 * pri[:, 3]
    w = pri[:, 2] * np.exp(loc[:, 2] * v1)
    h = pri[:, 3] * np.exp(loc[:, 3] * v1)
    corners = np.clip(np.stack([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2], axis=1), 0.0, 1.0)
    dets = []
    for (x1, y1, x2, y2), s in zip(corners, conf):
        if s < score_threshold or x2 <= x1 or y2 <= y1:
            continue
        dets.append(Detection(float(x1), float(y1), float(x2), float(y2), float(s)))
    return dets


def nms(dets, iou_threshold: float = 0.3, max_out: int | None = None) -> list[Detection]:
    """Greedy non-maximum suppression.

    Detections are visited by descending score (ties by input order); a
    detection is discarded when its IoU with an already kept one is strictly
    greater than ``iou_threshold``.
    """
    dets = list(dets)
    if not dets:
        return []
    boxes = np.array([d.box for d in dets], dtype=np.float64)
    scores = np.array([d.score for d in dets], dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("detection scores must be finite")
    order = np.argsort(-scores, kind="stable")
    x1, y1, x2, y2 = boxes.T
    areas = (x2 - x1) * (y2 - y1)
    keep = []
    limit = len(dets) if max_out is None else max_out
    while order.size and len(keep) < limit:
        i = order[0]
        keep.append(i)
        rest = order[1:]
        iw = np.minimum(x2[i], x2[rest]) - np.maximum(x1[i], x1[rest])
        ih = np.minimum(y2[i], y2[rest]) - np.maximum(y1[i], y1[rest])
        inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
        union = areas[i] + areas[rest] - inter
        with np.errstate(divide="ignore", invalid="ignore"):
            ovr = np.where(union > 0, inter / union, 0.0)
        order = rest[ovr <= iou_threshold]
    return [dets[i] for i in keep]


@dataclass(frozen=True)
class DetectorConfig:
    score_threshold: float = 0.7
    iou_threshold: float = 0.3
    max_out: int = 10
    frame_width: int = FRAME_SIZE[0]
    frame_height: int = FRAME_SIZE[1]
    variances: tuple[float, float] = VARIANCES

    def __post_init__(self):
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))
        if not 0.0 <= self.score_threshold <= 1.0 or not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError("detector thresholds must lie in [0, 1]")
        if self.max_out < 1 or self.frame_width < 1 or self.frame_height < 1:
            raise ValueError("max_out and frame size must be positive")

    @property
    def frame_size(self) -> tuple[int, int]:
        return (self.frame_width, self.frame_height)

    def postprocess(self, loc, conf, priors) -> list[Detection]:
        """Decode, suppress, and scale detections to frame pixels."""
        dets = nms(decode_anchors(loc, conf, priors, self.variances, self.score_threshold),
                   self.iou_threshold, self.max_out)
        fw, fh = self.frame_size
        return [Detection(d.x1 * fw, d.y1 * fh, d.x2 * fw, d.y2 * fh, d.score) for d in dets]
