"""Line-delimited JSON scenario and state-log records."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .indicators import NUM_LANDMARKS, FaceIndicators, one_hot

_REQUIRED = ("frame", "t_ms", "eye_open_l", "eye_open_r", "eye_viz_l", "eye_viz_r",
             "mouth", "yaw", "pitch", "roll", "action")
_OPTIONAL = ("bbox", "landmarks")

# stand-in landmarks when a record has none: every point at the crop centre
_NEUTRAL_LANDMARKS = np.full((NUM_LANDMARKS, 2), 0.5)


@dataclass(frozen=True)
class ScenarioRecord:
    """One frame of precomputed indicators; angles in radians, ``bbox`` is [x, y, w, h] px."""

    frame: int
    t_ms: int
    eye_open_l: float
    eye_open_r: float
    eye_viz_l: float
    eye_viz_r: float
    mouth: int
    yaw: float
    pitch: float
    roll: float
    action: int
    bbox: tuple[float, float, float, float] | None = None
    landmarks: tuple[float, ...] | None = field(default=None, repr=False)

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioRecord":
        if not isinstance(obj, dict):
            raise ValueError("record must be a JSON object")
        missing = [k for k in _REQUIRED if k not in obj]
        if missing:
            raise ValueError(f"missing fields: {', '.join(missing)}")
        unknown = set(obj) - set(_REQUIRED) - set(_OPTIONAL)
        if unknown:
            raise ValueError(f"unknown fields: {', '.join(sorted(unknown))}")
        for k in ("frame", "t_ms", "mouth", "action"):
            if not isinstance(obj[k], int) or isinstance(obj[k], bool) or obj[k] < 0:
                raise ValueError(f"{k} must be a non-negative integer")
        if obj["mouth"] > 2 or obj["action"] > 2:
            raise ValueError("mouth and action must be 0, 1 or 2")
        vals = {}
        for k in ("eye_open_l", "eye_open_r", "eye_viz_l", "eye_viz_r", "yaw", "pitch", "roll"):
            v = obj[k]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValueError(f"{k} must be a finite number")
            vals[k] = float(v)
        for k in ("eye_open_l", "eye_open_r", "eye_viz_l", "eye_viz_r"):
            if not 0.0 <= vals[k] <= 1.0:
                raise ValueError(f"{k} must lie in [0, 1]")
        for k in ("yaw", "pitch", "roll"):
            if abs(vals[k]) > math.pi / 2:
                raise ValueError(f"{k} must lie in [-pi/2, pi/2]")
        bbox = obj.get("bbox")
        if bbox is not None:
            if len(bbox) != 4 or not all(isinstance(v, (int, float)) for v in bbox):
                raise ValueError("bbox must be [x, y, w, h]")
            bbox = tuple(float(v) for v in bbox)
            if bbox[2] <= 0 or bbox[3] <= 0:
                raise ValueError("bbox extent must be positive")
        lms = obj.get("landmarks")
        if lms is not None:
            if len(lms) != 2 * NUM_LANDMARKS:
                raise ValueError(f"landmarks must hold {2 * NUM_LANDMARKS} numbers")
            lms = tuple(float(v) for v in lms)
            if any(not 0.0 <= v <= 1.0 for v in lms):
                raise ValueError("landmarks must lie in [0, 1]")
        return cls(frame=obj["frame"], t_ms=obj["t_ms"], mouth=obj["mouth"], action=obj["action"],
                   bbox=bbox, landmarks=lms, **vals)

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in _REQUIRED}
        if self.bbox is not None:
            out["bbox"] = list(self.bbox)
        if self.landmarks is not None:
            out["landmarks"] = list(self.landmarks)
        return out

    def to_indicators(self) -> FaceIndicators:
        lms = (_NEUTRAL_LANDMARKS if self.landmarks is None
               else np.asarray(self.landmarks).reshape(NUM_LANDMARKS, 2))
        return FaceIndicators(
            landmarks=lms,
            eye_viz=(self.eye_viz_l, self.eye_viz_r),
            eye_open=(self.eye_open_l, self.eye_open_r),
            mouth=one_hot(self.mouth),
            head=(self.yaw, self.pitch, self.roll),
            action=one_hot(self.action),
        )

    @classmethod
    def from_indicators(cls, frame: int, t_ms: int, ind: FaceIndicators, bbox=None,
                        with_landmarks: bool = True) -> "ScenarioRecord":
        return cls(frame=frame, t_ms=t_ms,
                   eye_open_l=float(ind.eye_open[0]), eye_open_r=float(ind.eye_open[1]),
                   eye_viz_l=float(ind.eye_viz[0]), eye_viz_r=float(ind.eye_viz[1]),
                   mouth=ind.mouth_class, yaw=ind.yaw, pitch=ind.pitch, roll=ind.roll,
                   action=ind.action_class, bbox=None if bbox is None else tuple(bbox),
                   landmarks=tuple(float(v) for v in ind.landmarks.ravel()) if with_landmarks else None)


def parse_scenario(lines) -> list[ScenarioRecord]:
    """Parse JSONL text (an iterable of lines); blank lines are skipped.

    Raises :class:`ParseError` carrying the 1-based line number.
    """
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = ScenarioRecord.from_json(json.loads(line))
        except (ValueError, TypeError) as exc:
            raise ParseError(str(exc), lineno) from exc
        expected = records[-1].frame + 1 if records else 0
        if rec.frame != expected:
            raise ParseError(f"frame {rec.frame} out of sequence (expected {expected})", lineno)
        if records and rec.t_ms <= records[-1].t_ms:
            raise ParseError(f"t_ms {rec.t_ms} does not increase", lineno)
        records.append(rec)
    return records


def read_scenario(path) -> list[ScenarioRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh)


def write_jsonl(path_or_fh, objs):
    own = isinstance(path_or_fh, (str, bytes)) or hasattr(path_or_fh, "__fspath__")
    fh = open(path_or_fh, "w", encoding="utf-8") if own else path_or_fh
    try:
        for obj in objs:
            fh.write(json.dumps(obj.to_json() if hasattr(obj, "to_json") else obj,
                                separators=(",", ":")))
            fh.write("\n")
    finally:
        if own:
            fh.close()
