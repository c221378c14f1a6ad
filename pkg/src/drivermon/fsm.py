"""Alert state machine: Calibration -> Safe / LowAwareness / Danger.

Escalation is immediate. De-escalation commits only after the lower level
has been observed continuously for ``cool_ms``; the commit goes to the
highest level seen during that cooling interval.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .decision import Module
from .errors import NotCalibrated


class Phase(enum.IntEnum):
    CALIBRATION = -1
    SAFE = 0
    LOW_AWARENESS = 1
    DANGER = 2

    @property
    def label(self) -> str:
        return {-1: "calibration", 0: "safe", 1: "low_awareness", 2: "danger"}[int(self)]


@dataclass(frozen=True)
class FsmConfig:
    cool_ms: int = 3000
    calibration_samples: int = 100

    def __post_init__(self):
        if self.cool_ms < 0:
            raise ValueError("cool_ms must be >= 0")
        if self.calibration_samples < 1:
            raise ValueError("calibration_samples must be >= 1")


@dataclass(frozen=True)
class PendingDowngrade:
    target: Phase
    since: int
    cause: Module | None


@dataclass(frozen=True)
class DmsState:
    phase: Phase = Phase.CALIBRATION
    cause: Module | None = None
    entered_at: int = 0
    pending: PendingDowngrade | None = None

    def __post_init__(self):
        if (self.cause is None) != (self.phase in (Phase.CALIBRATION, Phase.SAFE)):
            raise ValueError(f"cause must be set exactly for alert phases, got {self.phase.label}")
        if self.pending is not None and not self.pending.target < self.phase:
            raise ValueError("pending downgrade must target a lower phase")


@dataclass(frozen=True)
class TransitionEvent:
    from_phase: Phase
    to_phase: Phase
    cause: Module | None
    t_ms: int

    def to_json(self) -> dict:
        return {"from": self.from_phase.label, "to": self.to_phase.label,
                "cause": self.cause.value if self.cause else None, "t_ms": self.t_ms}


@dataclass(frozen=True)
class Report:
    phase: Phase
    cause: Module | None
    dwell_ms: int


def _enter(phase: Phase, cause, now: int) -> DmsState:
    return DmsState(phase, cause if phase > Phase.SAFE else None, now, None)


def complete_calibration(state: DmsState, now: int):
    if state.phase != Phase.CALIBRATION:
        raise ValueError("calibration already completed")
    new = _enter(Phase.SAFE, None, now)
    return new, [TransitionEvent(Phase.CALIBRATION, Phase.SAFE, None, now)]


def fsm_step(state: DmsState, s_global: int, cause: Module | None, now: int,
             cfg: FsmConfig = FsmConfig()):
    """Advance on one arbitrated reading; returns ``(new_state, events)``."""
    if state.phase == Phase.CALIBRATION:
        raise NotCalibrated("risk reading received before calibration completed")
    level = Phase(int(s_global))
    if level == Phase.CALIBRATION:
        raise ValueError("s_global must be 0, 1 or 2")

    if level > Phase.SAFE and cause is None:
        cause = state.cause
        if cause is None:
            raise ValueError("a cause is required for an alert-level reading")
    if level > state.phase:
        new = _enter(level, cause, now)
        return new, [TransitionEvent(state.phase, level, new.cause, now)]

    if level == state.phase:
        if state.phase > Phase.SAFE and cause is not None and cause != state.cause:
            return replace(state, cause=cause, pending=None), []
        return replace(state, pending=None), []

    pending = state.pending
    if pending is None:
        pending = PendingDowngrade(level, now, cause)
    elif level > pending.target:
        pending = PendingDowngrade(level, pending.since, cause)
    if now - pending.since >= cfg.cool_ms:
        new = _enter(pending.target, pending.cause, now)
        return new, [TransitionEvent(state.phase, new.phase, new.cause, now)]
    return replace(state, pending=pending), []


def current_report(state: DmsState, now: int) -> Report:
    return Report(state.phase, state.cause, now - state.entered_at)


class AlertFsm:
    """Mutable wrapper around :func:`fsm_step` that keeps the event history."""

    def __init__(self, cfg: FsmConfig | None = None):
        self.cfg = cfg or FsmConfig()
        self.state = DmsState()
        self.events: list[TransitionEvent] = []

    def calibration_done(self, now: int) -> list[TransitionEvent]:
        self.state, ev = complete_calibration(self.state, now)
        self.events.extend(ev)
        return ev

    def step(self, s_global: int, cause: Module | None, now: int) -> list[TransitionEvent]:
        self.state, ev = fsm_step(self.state, s_global, cause, now, self.cfg)
        self.events.extend(ev)
        return ev

    def report(self, now: int) -> Report:
        return current_report(self.state, now)
