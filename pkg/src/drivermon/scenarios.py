"""Synthetic driving scenarios for exercising the pipeline without a camera or weights.

``python -m drivermon.scenarios OUT_DIR`` regenerates the bundled files.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

from .formats import ScenarioRecord, parse_scenario, write_jsonl

FRAME_MS = 50  # 20 FPS
BUNDLED = Path(__file__).resolve().parent / "data" / "scenarios"
KINDS = ("safe_driving", "drowsy", "distracted")


def _segment(t_s, spans):
    return any(a <= t_s < b for a, b in spans)


def make_scenario(kind: str, seed: int = 0) -> list[ScenarioRecord]:
    """Build one of :data:`KINDS` as a list of records at 20 FPS."""
    if kind not in KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}; choose from {KINDS}")
    rng = np.random.default_rng(seed)
    duration_s = {"safe_driving": 60, "drowsy": 150, "distracted": 140}[kind]
    n = duration_s * 1000 // FRAME_MS
    records = []
    for i in range(n):
        t = i * FRAME_MS
        ts = t / 1000.0
        # blinks: 150 ms every 4 s
        blink = (t % 4000) < 150 and ts > 6
        eye = 0.8 + rng.normal(0, 0.02)
        if blink:
            eye = 0.05
        mouth, action = 0, 0
        yaw = rng.normal(0, 0.02)
        pitch = rng.normal(0, 0.02)
        roll = rng.normal(0, 0.02)

        if kind == "drowsy":
            if 30 <= ts < 75:
                # long closures (1.5 s) broken by short openings (0.5 s)
                eye = 0.05 if (t - 30_000) % 2000 < 1500 else 0.55 + rng.normal(0, 0.02)
                pitch += 0.1
            if 40 <= ts < 41.5:
                mouth = 2
        elif kind == "distracted":
            if 20 <= ts < 35:
                action = 1
            if 45 <= ts < 52:
                yaw += 0.75
            if 58 <= ts < 72:
                action = 2

        eye = float(np.clip(eye, 0.0, 1.0))
        sway = 4.0 * math.sin(2 * math.pi * ts / 6.0)
        bbox = [round(110.0 + sway, 3), round(60.0 + 0.5 * sway, 3), 100.0, 120.0]
        records.append(ScenarioRecord(
            frame=i, t_ms=t, eye_open_l=round(eye, 4), eye_open_r=round(eye, 4),
            eye_viz_l=0.98, eye_viz_r=0.98, mouth=mouth,
            yaw=round(float(np.clip(yaw, -1.5, 1.5)), 5),
            pitch=round(float(np.clip(pitch, -1.5, 1.5)), 5),
            roll=round(float(np.clip(roll, -1.5, 1.5)), 5),
            action=action, bbox=tuple(bbox)))
    return records


def bundled_scenario(kind: str) -> list[ScenarioRecord]:
    with open(BUNDLED / f"{kind}.jsonl", encoding="utf-8") as fh:
        return parse_scenario(fh)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    out = Path(argv[0]) if argv else BUNDLED
    out.mkdir(parents=True, exist_ok=True)
    for kind in KINDS:
        write_jsonl(out / f"{kind}.jsonl", make_scenario(kind))
        print(out / f"{kind}.jsonl")


if __name__ == "__main__":
    main()
