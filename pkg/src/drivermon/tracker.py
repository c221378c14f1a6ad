"""SORT-style face tracker that only needs a detection every N frames."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .detector import Detection, iou_matrix
from .errors import NumericalFailure, SchedulerViolation
from .indicators import RoiBox

_S_FLOOR = 1e-6

# constant-velocity transition over state (u, v, s, r, du, dv, ds)
_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0
_H = np.eye(4, 7)


@dataclass(frozen=True)
class TrackerConfig:
    detection_interval: int = 4
    iou_min: float = 0.3
    max_coast: int = 10
    min_hits: int = 1
    # measurement variances: centre px^2 and scale/aspect terms
    r_center: float = 1.0
    r_scale: float = 10.0
    # process noise on position, velocity and scale velocity
    q_pos: float = 1.0
    q_vel: float = 0.01
    q_scale_vel: float = 1e-4
    # initial covariance: measured terms and (unobserved) velocities
    p_init: float = 10.0
    p_vel_init: float = 1e4

    def __post_init__(self):
        if self.detection_interval < 1:
            raise ValueError("detection_interval must be >= 1")
        if not 0.0 < self.iou_min < 1.0:
            raise ValueError("iou_min must lie in (0, 1)")
        if self.max_coast < 0 or self.min_hits < 1:
            raise ValueError("max_coast must be >= 0 and min_hits >= 1")

    @property
    def R(self) -> np.ndarray:
        return np.diag([self.r_center, self.r_center, self.r_scale, self.r_scale])

    @property
    def Q(self) -> np.ndarray:
        return np.diag([self.q_pos] * 4 + [self.q_vel, self.q_vel, self.q_scale_vel])

    @property
    def P0(self) -> np.ndarray:
        return np.diag([self.p_init] * 4 + [self.p_vel_init] * 3)


def box_to_z(box) -> np.ndarray:
    """Corner box -> measurement (u, v, s, r)."""
    x1, y1, x2, y2 = box
    w, h = x2 - x1, y2 - y1
    return np.array([x1 + w / 2.0, y1 + h / 2.0, w * h, w / h])


def x_to_box(x) -> tuple[float, float, float, float]:
    s = max(float(x[2]), _S_FLOOR)
    r = max(float(x[3]), _S_FLOOR)
    w = np.sqrt(s * r)
    h = s / w
    return (float(x[0] - w / 2), float(x[1] - h / 2), float(x[0] + w / 2), float(x[1] + h / 2))


class KalmanBoxTrack:
    """Kalman state of one face box plus lifecycle counters."""

    def __init__(self, det: Detection, cfg: TrackerConfig, track_id: int = 0):
        self.cfg = cfg
        self.x = np.zeros(7)
        self.x[:4] = box_to_z(det.box)
        self.P = cfg.P0.copy()
        self.age = 0
        self.time_since_update = 0
        self.hits = 1
        self.score = float(det.score)
        self.id = track_id

    @property
    def box(self):
        return x_to_box(self.x)

    def predict(self):
        if self.x[2] + self.x[6] <= _S_FLOOR:
            self.x[6] = 0.0
        self.x = _F @ self.x
        self.x[2] = max(self.x[2], _S_FLOOR)
        self.P = _F @ self.P @ _F.T + self.cfg.Q
        self.P = 0.5 * (self.P + self.P.T)
        self.age += 1
        self.time_since_update += 1
        return self.box

    def update(self, det: Detection):
        z = box_to_z(det.box)
        y = z - _H @ self.x
        S = _H @ self.P @ _H.T + self.cfg.R
        try:
            K = np.linalg.solve(S, _H @ self.P).T
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("innovation covariance is singular") from exc
        if not np.all(np.isfinite(K)):
            raise NumericalFailure("innovation covariance is singular")
        self.x = self.x + K @ y
        # Joseph form keeps P symmetric positive semi-definite
        I_KH = np.eye(7) - K @ _H
        self.P = I_KH @ self.P @ I_KH.T + K @ self.cfg.R @ K.T
        self.P = 0.5 * (self.P + self.P.T)
        self.time_since_update = 0
        self.hits += 1
        self.score = float(det.score)


def associate(track_boxes, dets, iou_min: float):
    """Hungarian assignment maximizing total IoU.

    Returns ``(matches, unmatched_tracks, unmatched_dets)`` where matches is
    a list of (track_index, det_index); pairs below ``iou_min`` are split.
    """
    track_boxes = list(track_boxes)
    det_boxes = [d.box if isinstance(d, Detection) else tuple(d) for d in dets]
    if not track_boxes or not det_boxes:
        return [], list(range(len(track_boxes))), list(range(len(det_boxes)))
    ious = iou_matrix(track_boxes, det_boxes)
    rows, cols = linear_sum_assignment(ious, maximize=True)
    matches = []
    um_t = set(range(len(track_boxes)))
    um_d = set(range(len(det_boxes)))
    for r, c in zip(rows, cols):
        if ious[r, c] >= iou_min:
            matches.append((int(r), int(c)))
            um_t.discard(r)
            um_d.discard(c)
    return matches, sorted(um_t), sorted(um_d)


class FaceTracker:
    """Single-driver tracker. ``step`` must be fed detections on scheduled frames."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[KalmanBoxTrack] = []
        self._next_id = 0

    @property
    def alive(self) -> bool:
        return any(self._reportable(t) for t in self.tracks)

    def needs_detection(self, frame_idx: int) -> bool:
        return frame_idx % self.cfg.detection_interval == 0 or not self.alive

    def _reportable(self, t: KalmanBoxTrack) -> bool:
        return t.hits >= self.cfg.min_hits and t.time_since_update <= self.cfg.max_coast

    def step(self, frame_idx: int, dets=None) -> RoiBox | None:
        """Advance one frame; return the driver's box in pixels, or None."""
        required = self.needs_detection(frame_idx)
        if required and dets is None:
            raise SchedulerViolation(f"frame {frame_idx}: detections required but not supplied")
        if not required and dets is not None:
            raise SchedulerViolation(f"frame {frame_idx}: detections supplied on a coasting frame")

        predicted = [t.predict() for t in self.tracks]
        if dets is not None:
            dets = list(dets)
            matches, _, unmatched = associate(predicted, dets, self.cfg.iou_min)
            for ti, di in matches:
                self.tracks[ti].update(dets[di])
            for di in unmatched:
                self.tracks.append(KalmanBoxTrack(dets[di], self.cfg, self._next_id))
                self._next_id += 1
        self.tracks = [t for t in self.tracks if t.time_since_update <= self.cfg.max_coast]

        best = None
        for t in self.tracks:
            if self._reportable(t) and (best is None or t.score > best.score):
                best = t
        if best is None:
            return None
        x1, y1, x2, y2 = best.box
        return RoiBox.from_corners(x1, y1, x2, y2, min(max(best.score, 0.0), 1.0))
