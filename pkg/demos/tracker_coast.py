"""Track a moving face, running the detector only every N-th frame.

Run: python3 demos/tracker_coast.py
"""
from drivermon.detector import Detection, iou
from drivermon.tracker import FaceTracker, TrackerConfig

VX, VY = 2.0, -1.0  # px per frame


def truth(f):
    cx, cy = 160 + VX * f, 120 + VY * f
    return (cx - 50, cy - 50, cx + 50, cy + 50)


for n in (1, 4, 8):
    tr = FaceTracker(TrackerConfig(detection_interval=n))
    worst = 1.0
    for f in range(60):
        dets = [Detection(*truth(f), 0.99)] if tr.needs_detection(f) else None
        roi = tr.step(f, dets)
        if f >= 10:
            worst = min(worst, iou(roi.corners(), truth(f)))
    print(f"N={n}: worst IoU against ground truth after warm-up {worst:.4f}")
