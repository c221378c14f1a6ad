"""Frame-by-frame orchestration and the detection-interval latency simulator.

Per frame: schedule -> detections -> tracker -> face indicators (from the
scenario or the multi-task network on an ROI crop) -> decision unit -> FSM.
Tracking and decision/FSM run strictly in frame order; the per-frame
perception stage between them may run on a thread pool without changing
the output.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
from scipy.ndimage import map_coordinates

from .decision import DecisionUnit, RiskScores, global_state, root_cause
from .detector import Detection
from .fsm import AlertFsm, Phase
from .indicators import FaceIndicators, RoiBox, decode_output_vector
from .tracker import FaceTracker

if TYPE_CHECKING:
    from .config import Config
    from .formats import ScenarioRecord
    from .micronet import MultiTaskNet


class Action(str, enum.Enum):
    DETECT_AND_INFER = "detect_and_infer"
    INFER_ONLY = "infer_only"


def schedule(frame_idx: int, track_alive: bool, interval: int) -> Action:
    if interval < 1:
        raise ValueError("detection interval must be >= 1")
    if frame_idx % interval == 0 or not track_alive:
        return Action.DETECT_AND_INFER
    return Action.INFER_ONLY


# ---------------------------------------------------------------- latency

@dataclass(frozen=True)
class LatencyModel:
    """Per-stage costs in milliseconds. Defaults are illustrative.

    ``per_frame`` (multi-task inference + tracking + decision + overhead) is
    paid every frame; ``detect`` only on detection frames. Camera
    acquisition time is not modelled.
    """

    detect: float = 7.58
    mt_infer: float = 3.52
    track: float = 0.35
    decide: float = 0.10
    overhead: float = 12.18

    def __post_init__(self):
        for name in ("detect", "mt_infer", "track", "decide", "overhead"):
            if getattr(self, name) < 0:
                raise ValueError(f"latency cost {name} must be >= 0")

    @property
    def per_frame(self) -> float:
        return self.mt_infer + self.overhead + self.track + self.decide

    def frame_cost(self, action: Action) -> float:
        if action is Action.DETECT_AND_INFER:
            return self.per_frame + self.detect
        return self.per_frame

    @classmethod
    def fitted(cls, per_frame: float, detect: float) -> "LatencyModel":
        """Two-parameter model with all per-frame cost lumped into ``overhead``."""
        return cls(detect=detect, mt_infer=0.0, track=0.0, decide=0.0, overhead=per_frame)


@dataclass(frozen=True)
class LatencySim:
    interval: int
    per_frame: np.ndarray
    mean: float
    p50: float
    p95: float
    max: float

    def to_json(self) -> dict:
        return {"interval": self.interval, "frames": int(self.per_frame.size), "mean_ms": self.mean,
                "p50_ms": self.p50, "p95_ms": self.p95, "max_ms": self.max}


def simulate_latency(model: LatencyModel, interval: int, frames: int) -> LatencySim:
    """Per-frame cost with detection every ``interval`` frames and a live track throughout.

    The mean is computed from the detection-frame count with a single
    rounding, so for ``frames % interval == 0`` it equals
    ``per_frame + detect / interval`` exactly.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    actions = [schedule(i, True, interval) for i in range(frames)]
    costs = np.array([model.frame_cost(a) for a in actions])
    k = sum(a is Action.DETECT_AND_INFER for a in actions)
    mean = model.per_frame + float(Fraction(model.detect) * Fraction(k, frames))
    return LatencySim(interval, costs, mean, float(np.percentile(costs, 50)),
                      float(np.percentile(costs, 95)), float(costs.max()))


# ---------------------------------------------------------------- frames

@dataclass(frozen=True)
class FrameInput:
    """One frame: scenario indicators and/or a raw image plus optional detections.

    ``detections`` are pixel-space boxes from an external detector or the
    scenario ground truth; ``None`` means the detector found nothing.
    """

    frame: int
    t_ms: int
    indicators: FaceIndicators | None = None
    detections: tuple[Detection, ...] | None = None
    image: np.ndarray | None = field(default=None, repr=False)


@dataclass
class StateLogRecord:
    frame: int
    t_ms: int
    action: str
    box: list[float] | None
    observed: bool
    scores: dict | None
    s_global: int | None
    safeness: float | None
    phase: str
    cause: str | None
    latency_ms: float
    metrics: dict | None = None
    events: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "frame": self.frame, "t_ms": self.t_ms, "action": self.action, "box": self.box,
            "observed": self.observed, "scores": self.scores, "s_global": self.s_global,
            "safeness": self.safeness, "phase": self.phase, "cause": self.cause,
            "latency_ms": self.latency_ms, "metrics": self.metrics, "events": self.events,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StateLogRecord":
        return cls(**obj)


def crop_roi(image, roi: RoiBox, size: int = 160, expand: float = 1.25):
    """Square crop around ``roi`` enlarged by ``expand``, bilinearly resampled to size x size.

    Returns the crop and the crop window as a :class:`RoiBox` (needed to map
    normalized landmarks back to the frame).
    """
    image = np.asarray(image, dtype=np.float32)
    side = expand * max(roi.w, roi.h)
    cx, cy = roi.x + roi.w / 2, roi.y + roi.h / 2
    x0, y0 = cx - side / 2, cy - side / 2
    step = side / size
    grid = (np.arange(size) + 0.5) * step - 0.5
    yy, xx = np.meshgrid(y0 + grid, x0 + grid, indexing="ij")
    crop = np.stack([map_coordinates(ch, [yy, xx], order=1, mode="constant", cval=0.0)
                     for ch in image]).astype(np.float32)
    return crop, RoiBox(x0, y0, side, side, roi.score)


def _noisy(det: Detection, sigma: float, seed: int, frame: int) -> Detection:
    if sigma <= 0:
        return det
    rng = np.random.default_rng([seed, frame])
    dx, dy, dw, dh = rng.normal(0.0, sigma, 4)
    w = max(det.x2 - det.x1 + dw, 1.0)
    h = max(det.y2 - det.y1 + dh, 1.0)
    return Detection(det.x1 + dx, det.y1 + dy, det.x1 + dx + w, det.y1 + dy + h, det.score)


def frames_from_scenario(records, bbox_noise_px: float = 0.0, seed: int = 0):
    """Scenario records -> :class:`FrameInput` stream (ground-truth boxes as detections)."""
    for rec in records:
        dets = None
        if rec.bbox is not None:
            x, y, w, h = rec.bbox
            dets = (_noisy(Detection(x, y, x + w, y + h, 0.99), bbox_noise_px, seed, rec.frame),)
        yield FrameInput(rec.frame, rec.t_ms, rec.to_indicators(), dets)


class DmsPipeline:
    """Owns the tracker, decision unit and FSM for one driver stream."""

    def __init__(self, config: "Config | None" = None, model: "MultiTaskNet | None" = None,
                 workers: int = 1):
        from .config import Config

        self.cfg = config or Config()
        self.model = model
        self.workers = max(1, int(workers))
        self.tracker = FaceTracker(self.cfg.tracker)
        self.decision = DecisionUnit(self.cfg.thresholds, self.cfg.fsm.calibration_samples)
        self.fsm = AlertFsm(self.cfg.fsm)

    # stage 1: sequential
    def _track(self, inp: FrameInput):
        action = schedule(inp.frame, self.tracker.alive, self.cfg.tracker.detection_interval)
        dets = None
        if action is Action.DETECT_AND_INFER:
            dets = list(inp.detections or ())
        roi = self.tracker.step(inp.frame, dets)
        return action, roi

    # stage 2: pure, may run in parallel
    def _perceive(self, inp: FrameInput, roi: RoiBox | None) -> FaceIndicators | None:
        if roi is None:
            return None
        if inp.image is not None and self.model is not None:
            pc = self.cfg.pipeline
            crop, _ = crop_roi(inp.image, roi, pc.input_size, pc.roi_expand)
            return decode_output_vector(self.model.forward(crop), activations_applied=False)
        return inp.indicators

    # stage 3: sequential
    def _decide(self, inp: FrameInput, action: Action, roi, ind) -> StateLogRecord:
        t = int(inp.t_ms)
        events = []
        out = self.decision.update(t, ind)
        scores: RiskScores | None = out.scores
        s_glob = cause = None
        if out.calibration_done:
            events += self.fsm.calibration_done(t)
        elif scores is not None:
            s_glob = global_state(scores)
            cause = root_cause(scores)
            events += self.fsm.step(s_glob, cause, t)
        st = self.fsm.state
        return StateLogRecord(
            frame=inp.frame, t_ms=t, action=action.value,
            box=None if roi is None else [roi.x, roi.y, roi.w, roi.h],
            observed=ind is not None,
            scores=None if scores is None else {
                "perclos": scores.perclos, "mouth": scores.mouth, "headpose": scores.headpose,
                "cellphone": scores.cellphone, "smoking": scores.smoking},
            s_global=s_glob,
            safeness=None if scores is None else scores.safeness,
            phase=st.phase.label,
            cause=None if st.phase <= Phase.SAFE else st.cause.value,
            latency_ms=self.cfg.latency.frame_cost(action),
            metrics=out.metrics,
            events=[e.to_json() for e in events],
        )

    def run_frame(self, inp: FrameInput) -> StateLogRecord:
        action, roi = self._track(inp)
        return self._decide(inp, action, roi, self._perceive(inp, roi))

    def run(self, frames, chunk: int = 32) -> list[StateLogRecord]:
        """Process a frame stream; with ``workers > 1`` perception runs on a thread pool.

        ``chunk`` bounds how many frames are in flight between stages.
        """
        if self.workers == 1:
            return [self.run_frame(f) for f in frames]
        out = []
        with ThreadPoolExecutor(self.workers) as pool:
            batch = []
            for f in frames:
                batch.append((f, *self._track(f)))
                if len(batch) >= chunk:
                    out += self._flush(pool, batch)
                    batch = []
            out += self._flush(pool, batch)
        return out

    def _flush(self, pool, batch):
        inds = pool.map(lambda b: self._perceive(b[0], b[2]), batch)
        return [self._decide(f, a, roi, ind) for (f, a, roi), ind in zip(batch, inds)]


def run_scenario(records: "list[ScenarioRecord]", config: "Config | None" = None,
                 workers: int = 1, seed: int | None = None) -> list[StateLogRecord]:
    pipe = DmsPipeline(config, workers=workers)
    pc = pipe.cfg.pipeline
    frames = frames_from_scenario(records, pc.bbox_noise_px, pc.seed if seed is None else seed)
    return pipe.run(frames)
