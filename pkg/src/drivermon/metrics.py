"""Offline evaluation metrics for the multi-task outputs."""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateIod, LengthMismatch, ZeroSupport
from .indicators import FaceIndicators, LandmarkSchema


def interocular_distance(gt, iod_ids=(60, 72)) -> float:
    gt = np.asarray(gt, dtype=np.float64)
    return float(np.linalg.norm(gt[iod_ids[0]] - gt[iod_ids[1]]))


def nme(pred, gt, iod_ids=(60, 72), iod: float | None = None, eps: float = 1e-12) -> float:
    """Mean point-to-point landmark error divided by the ground-truth interocular distance.

    ``iod`` overrides the distance computed from ``iod_ids``.
    """
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 2)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 2)
    if pred.shape != gt.shape or len(gt) == 0:
        raise LengthMismatch(f"point sets differ: {pred.shape} vs {gt.shape}")
    if iod is None:
        iod = interocular_distance(gt, iod_ids)
    if iod <= eps:
        raise DegenerateIod(f"interocular distance {iod:g} is degenerate")
    return float(np.mean(np.linalg.norm(pred - gt, axis=1)) / iod)


def weighted_accuracy(accuracies, supports) -> float:
    acc = np.asarray(accuracies, dtype=np.float64).ravel()
    sup = np.asarray(supports, dtype=np.float64).ravel()
    if acc.shape != sup.shape:
        raise LengthMismatch("accuracies and supports must have equal length")
    if np.any(sup < 0):
        raise ValueError("supports must be non-negative")
    total = sup.sum()
    if total <= 0:
        raise ZeroSupport("all supports are zero")
    return float(np.dot(acc, sup) / total)


def circular_error_deg(a: float, b: float) -> float:
    """Absolute angular difference in degrees, wrapped into [0, 180]. Inputs in radians."""
    d = abs(math.degrees(a - b)) % 360.0
    return min(d, 360.0 - d)


def binary_accuracy(pred, gt, threshold: float = 0.5) -> float:
    p = np.asarray(pred) >= threshold
    g = np.asarray(gt) >= threshold
    return float(np.mean(p == g)) if p.size else 0.0


def classwise_accuracy(pred_cls, gt_cls, num_classes: int = 3):
    """Per-class recall and the support (ground-truth count) of each class."""
    pred_cls = np.asarray(pred_cls)
    gt_cls = np.asarray(gt_cls)
    accs, sups = [], []
    for c in range(num_classes):
        mask = gt_cls == c
        sups.append(int(mask.sum()))
        accs.append(float(np.mean(pred_cls[mask] == c)) if mask.any() else 0.0)
    return accs, sups


def evaluate(preds: list[FaceIndicators], gts: list[FaceIndicators],
             schema: LandmarkSchema | None = None, eye_threshold: float = 0.5,
             with_landmarks=None) -> dict:
    """Aggregate report over aligned prediction / ground-truth pairs.

    ``with_landmarks`` optionally flags which pairs carry real landmark
    annotations; NME is averaged over those only.
    """
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gts)} ground-truth records")
    if not gts:
        raise ValueError("nothing to evaluate")
    schema = schema or LandmarkSchema()
    if with_landmarks is None:
        with_landmarks = [True] * len(gts)

    nmes = [nme(p.landmarks, g.landmarks, schema.iod)
            for p, g, use in zip(preds, gts, with_landmarks) if use]

    eye_accs, eye_sups = [], []
    for field in ("eye_open", "eye_viz"):
        for side in (0, 1):
            pv = [getattr(p, field)[side] for p in preds]
            gv = [getattr(g, field)[side] for g in gts]
            eye_accs.append(binary_accuracy(pv, gv, eye_threshold))
            eye_sups.append(len(gv))

    m_acc, m_sup = classwise_accuracy([p.mouth_class for p in preds], [g.mouth_class for g in gts])
    head = {}
    for i, name in enumerate(("yaw", "pitch", "roll")):
        head[name] = float(np.mean([circular_error_deg(p.head[i], g.head[i]) for p, g in zip(preds, gts)]))

    return {
        "count": len(gts),
        "nme": float(np.mean(nmes)) if nmes else None,
        "eyes": weighted_accuracy(eye_accs, eye_sups),
        "mouth": weighted_accuracy(m_acc, m_sup),
        "head_deg": head,
    }
