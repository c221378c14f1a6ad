"""Drowsiness and distraction heuristics turning per-frame indicators into risk levels.

Each monitored quantity is mapped to a level in {0, 1, 2} by comparing it
against a pair of thresholds. The five levels are combined by a max
(worst-case arbitration) and, for telemetry, into a weighted safeness score.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EmptyWindow, InvalidSample, NotCalibrated
from .indicators import FaceIndicators


class Module(str, enum.Enum):
    PERCLOS = "perclos"
    MOUTH = "mouth"
    HEADPOSE = "headpose"
    CELLPHONE = "cellphone"
    SMOKING = "smoking"


# field order of RiskScores
MODULES = (Module.PERCLOS, Module.MOUTH, Module.HEADPOSE, Module.CELLPHONE, Module.SMOKING)
# tie-break order for root-cause reporting
PRIORITY = (Module.PERCLOS, Module.HEADPOSE, Module.MOUTH, Module.CELLPHONE, Module.SMOKING)


@dataclass(frozen=True)
class Tier:
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"tau_low ({self.low}) must be below tau_high ({self.high})")


@dataclass(frozen=True)
class Thresholds:
    perclos: Tier = Tier(15.0, 30.0)          # percent of observed time
    mouth: Tier = Tier(1.0, 3.0)              # yawns per minute
    headpose: Tier = Tier(0.5, 1.0)           # mean normalized deviation
    cellphone: Tier = Tier(0.2, 0.5)          # fraction of frames
    smoking: Tier = Tier(0.2, 0.5)            # fraction of frames
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    closed_fraction: float = 0.8
    eye_viz_threshold: float = 0.5
    yawn_min_ms: int = 400
    perclos_window_ms: int = 60_000
    mouth_window_ms: int = 60_000
    action_window_ms: int = 60_000
    head_window_ms: int = 10_000
    min_observed_fraction: float = 0.25
    theta_max: float = math.radians(30.0)
    include_roll: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        if len(self.weights) != 4 or any(v < 0 for v in self.weights):
            raise ValueError("weights must be four non-negative numbers")
        if not 0.0 < self.closed_fraction <= 1.0:
            raise ValueError("closed_fraction must lie in (0, 1]")
        if self.theta_max <= 0:
            raise ValueError("theta_max must be positive")
        for name in ("perclos_window_ms", "mouth_window_ms", "action_window_ms", "head_window_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def tier(self, module: Module) -> Tier:
        return getattr(self, module.value)


@dataclass(frozen=True)
class RiskScores:
    perclos: int = 0
    mouth: int = 0
    headpose: int = 0
    cellphone: int = 0
    smoking: int = 0
    safeness: float = 0.0

    def __post_init__(self):
        for m in MODULES:
            if getattr(self, m.value) not in (0, 1, 2):
                raise ValueError(f"{m.value} level must be 0, 1 or 2")

    def levels(self) -> tuple[int, int, int, int, int]:
        return tuple(getattr(self, m.value) for m in MODULES)

    def __getitem__(self, module: Module) -> int:
        return getattr(self, Module(module).value)


def tiered_score(metric: float, tau_low: float, tau_high: float) -> int:
    """Iverson-bracket level: [metric > tau_low] + [metric > tau_high]."""
    if not tau_low < tau_high:
        raise ValueError("tau_low must be below tau_high")
    return int(metric > tau_low) + int(metric > tau_high)


def safeness_from_components(s_perclos, s_mouth, s_head, s_action, weights) -> float:
    l1, l2, l3, l4 = weights
    return l1 * s_perclos - l2 * s_mouth - l3 * (1 - s_head) - l4 * (1 - s_action)


def safeness_score(scores: RiskScores, weights) -> float:
    """Weighted score evaluated exactly as printed; telemetry only.

    The action term uses the worse of the cellphone and smoking levels.
    """
    return safeness_from_components(scores.perclos, scores.mouth, scores.headpose,
                                    max(scores.cellphone, scores.smoking), weights)


def global_state(scores: RiskScores) -> int:
    return max(scores.levels())


def root_cause(scores: RiskScores) -> Module:
    top = global_state(scores)
    for m in PRIORITY:
        if scores[m] == top:
            return m
    raise AssertionError("unreachable")


# ---------------------------------------------------------------- calibration

@dataclass(frozen=True)
class Baseline:
    ear_open: float = 0.0
    head_zero: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sample_count: int = 0
    completed: bool = False
    openness: tuple[float, ...] = field(default=(), repr=False)
    angles: tuple[tuple[float, float, float], ...] = field(default=(), repr=False)


def _visible_openness(eye_open, eye_viz, viz_threshold):
    return [float(o) for o, v in zip(eye_open, eye_viz) if v >= viz_threshold]


def calibrate_step(sample: FaceIndicators, cal: Baseline, min_samples: int = 100,
                   viz_threshold: float = 0.5) -> Baseline:
    """Accumulate one calibration sample; completes after ``min_samples``.

    The openness baseline is the median per-sample openness of visible eyes;
    the head zero is the circular mean of each angle.
    """
    if cal.completed:
        raise ValueError("calibration already completed")
    visible = _visible_openness(sample.eye_open, sample.eye_viz, viz_threshold)
    if not visible:
        raise InvalidSample("both eyes unobserved; calibration sample skipped")
    openness = cal.openness + (float(np.mean(visible)),)
    angles = cal.angles + (tuple(float(a) for a in sample.head),)
    n = len(openness)
    if n < min_samples:
        return Baseline(sample_count=n, openness=openness, angles=angles)
    arr = np.array(angles)
    head_zero = tuple(float(v) for v in np.arctan2(np.sin(arr).mean(axis=0), np.cos(arr).mean(axis=0)))
    ear_open = max(float(np.median(openness)), 1e-6)
    return Baseline(ear_open=ear_open, head_zero=head_zero, sample_count=n, completed=True)


def classify_eye_closed(eye_open, eye_viz, baseline: Baseline, closed_fraction: float = 0.8,
                        viz_threshold: float = 0.5) -> tuple[bool, bool]:
    """Return ``(observed, closed)`` for one frame.

    An eye is observed when its visibility is at least ``viz_threshold``.
    The frame is closed when every observed eye is below
    ``(1 - closed_fraction) * baseline.ear_open``.
    """
    if not baseline.completed:
        raise NotCalibrated("eye classification needs a completed baseline")
    limit = (1.0 - closed_fraction) * baseline.ear_open
    visible = _visible_openness(eye_open, eye_viz, viz_threshold)
    if not visible:
        return False, False
    return True, all(o < limit for o in visible)


# ---------------------------------------------------------------- PERCLOS

class PerclosValue(NamedTuple):
    percent: float
    sufficient: bool


class SlidingWindow:
    """Eye-state samples over the last ``window_ms``.

    Each sample holds until the next one (the newest holds until the query
    time). Timestamps are integer milliseconds so the running sums are exact.
    """

    def __init__(self, window_ms: int):
        if window_ms <= 0:
            raise ValueError("window_ms must be positive")
        self.window_ms = int(window_ms)
        self._buf: deque[tuple[int, bool, bool]] = deque()
        self._observed = 0
        self._closed = 0
        self._last: int | None = None  # survives eviction of the whole buffer

    def __len__(self):
        return len(self._buf)

    def __iter__(self):
        return iter(self._buf)

    def add(self, t_ms: int, observed: bool, closed: bool):
        if not isinstance(t_ms, (int, np.integer)):
            raise TypeError("timestamps must be integer milliseconds")
        t_ms = int(t_ms)
        if self._last is not None and t_ms <= self._last:
            raise ValueError(f"timestamp {t_ms} is not after {self._last}")
        if self._buf:
            t_prev, obs, cl = self._buf[-1]
            self._account(t_ms - t_prev, obs, cl)
        self._last = t_ms
        self._buf.append((t_ms, bool(observed), bool(observed and closed)))

    def _account(self, dt, observed, closed, sign=1):
        if observed:
            self._observed += sign * dt
            if closed:
                self._closed += sign * dt

    def evict(self, now_ms: int):
        cutoff = now_ms - self.window_ms
        while self._buf and self._buf[0][0] < cutoff:
            t0, obs, cl = self._buf.popleft()
            if self._buf:
                self._account(self._buf[0][0] - t0, obs, cl, sign=-1)

    def times(self, now_ms: int) -> tuple[int, int]:
        """(observed, observed-and-closed) milliseconds up to ``now_ms``."""
        observed, closed = self._observed, self._closed
        if self._buf:
            t_last, obs, cl = self._buf[-1]
            if now_ms < t_last:
                raise ValueError("query time precedes newest sample")
            if obs:
                observed += now_ms - t_last
                if cl:
                    closed += now_ms - t_last
        return observed, closed


def perclos(window: SlidingWindow, now_ms: int, min_observed_fraction: float = 0.25) -> PerclosValue:
    """Percentage of observed time with eyes closed inside the window."""
    window.evict(now_ms)
    if not len(window):
        raise EmptyWindow("no samples inside the PERCLOS window")
    observed, closed = window.times(now_ms)
    if observed <= 0 or observed < min_observed_fraction * window.window_ms:
        return PerclosValue(0.0, False)
    return PerclosValue(100.0 * closed / observed, True)


# ---------------------------------------------------------------- other metrics

def head_deviation(pose, baseline: Baseline, theta_max: float, include_roll: bool = False) -> float:
    """Largest angular offset from the calibrated zero, in units of ``theta_max``."""
    if not baseline.completed:
        raise NotCalibrated("head deviation needs a completed baseline")
    if theta_max <= 0:
        raise ValueError("theta_max must be positive")
    axes = 3 if include_roll else 2
    dev = 0.0
    for a, z in zip(tuple(pose)[:axes], baseline.head_zero[:axes]):
        d = math.remainder(float(a) - z, 2 * math.pi)
        dev = max(dev, abs(d))
    return dev / theta_max


def event_frequency(timeline, window_ms: int, now_ms: int) -> float:
    """Events per minute among onsets in ``[now - window_ms, now]``."""
    cutoff = now_ms - window_ms
    count = sum(1 for t in timeline if cutoff <= t <= now_ms)
    return count * 60_000.0 / window_ms


# ---------------------------------------------------------------- decision unit

@dataclass(frozen=True)
class DecisionOutput:
    calibrating: bool
    calibration_done: bool = False
    scores: RiskScores | None = None
    metrics: dict | None = None


class DecisionUnit:
    """Per-driver stateful evaluator; feed one frame at a time in timestamp order."""

    def __init__(self, thresholds: Thresholds | None = None, calibration_samples: int = 100):
        self.th = thresholds or Thresholds()
        self.calibration_samples = int(calibration_samples)
        self.baseline = Baseline()
        self.eyes = SlidingWindow(self.th.perclos_window_ms)
        self.yawns: deque[int] = deque()
        self._open_since: int | None = None
        self._yawn_counted = False
        self.head: deque[tuple[int, float]] = deque()
        self.actions: deque[tuple[int, int]] = deque()

    @property
    def calibrated(self) -> bool:
        return self.baseline.completed

    def update(self, t_ms: int, ind: FaceIndicators | None) -> DecisionOutput:
        if not self.calibrated:
            if ind is not None:
                try:
                    self.baseline = calibrate_step(ind, self.baseline, self.calibration_samples,
                                                   self.th.eye_viz_threshold)
                except InvalidSample:
                    pass
            return DecisionOutput(calibrating=not self.calibrated, calibration_done=self.calibrated)
        return self._monitor(int(t_ms), ind)

    def _monitor(self, t: int, ind: FaceIndicators | None) -> DecisionOutput:
        th = self.th
        if ind is None:
            self.eyes.add(t, False, False)
            self._open_since = None
        else:
            observed, closed = classify_eye_closed(ind.eye_open, ind.eye_viz, self.baseline,
                                                   th.closed_fraction, th.eye_viz_threshold)
            self.eyes.add(t, observed, closed)
            self._track_yawn(t, ind.mouth_class == 2)
            self.head.append((t, head_deviation(ind.head, self.baseline, th.theta_max, th.include_roll)))
            self.actions.append((t, ind.action_class))

        pc = perclos(self.eyes, t, th.min_observed_fraction)
        _evict(self.yawns, t - th.mouth_window_ms, key=lambda e: e)
        _evict(self.head, t - th.head_window_ms)
        _evict(self.actions, t - th.action_window_ms)
        yawn_rate = event_frequency(self.yawns, th.mouth_window_ms, t)
        head_dev = float(np.mean([d for _, d in self.head])) if self.head else 0.0
        n_act = len(self.actions)
        phone = sum(1 for _, c in self.actions if c == 1) / n_act if n_act else 0.0
        smoke = sum(1 for _, c in self.actions if c == 2) / n_act if n_act else 0.0

        levels = dict(
            perclos=tiered_score(pc.percent, th.perclos.low, th.perclos.high),
            mouth=tiered_score(yawn_rate, th.mouth.low, th.mouth.high),
            headpose=tiered_score(head_dev, th.headpose.low, th.headpose.high),
            cellphone=tiered_score(phone, th.cellphone.low, th.cellphone.high),
            smoking=tiered_score(smoke, th.smoking.low, th.smoking.high),
        )
        provisional = RiskScores(**levels)
        scores = RiskScores(**levels, safeness=safeness_score(provisional, th.weights))
        metrics = {"perclos": pc.percent, "perclos_sufficient": pc.sufficient,
                   "yawn_rate": yawn_rate, "head_deviation": head_dev,
                   "phone_fraction": phone, "smoking_fraction": smoke}
        return DecisionOutput(calibrating=False, scores=scores, metrics=metrics)

    def _track_yawn(self, t: int, mouth_open: bool):
        if not mouth_open:
            self._open_since = None
            return
        if self._open_since is None:
            self._open_since = t
            self._yawn_counted = False
        if not self._yawn_counted and t - self._open_since >= self.th.yawn_min_ms:
            self.yawns.append(self._open_since)
            self._yawn_counted = True


def _evict(buf: deque, cutoff: int, key=lambda e: e[0]):
    while buf and key(buf[0]) < cutoff:
        buf.popleft()
