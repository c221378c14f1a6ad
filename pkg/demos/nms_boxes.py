"""Greedy NMS on a handful of overlapping face candidates.

Run: python3 demos/nms_boxes.py
"""
from drivermon.detector import Detection, iou, nms

dets = {
    "A": Detection(0, 0, 10, 10, 0.9),
    "B": Detection(1, 1, 11, 11, 0.8),
    "C": Detection(20, 20, 30, 30, 0.7),
    "D": Detection(21, 20, 31, 30, 0.7),  # same score as C, later in order
}
for a, b in (("A", "B"), ("C", "D")):
    print(f"IoU({a},{b}) = {iou(dets[a].box, dets[b].box):.3f}")
names = {id(d): k for k, d in dets.items()}
for thr in (0.5, 0.9):
    kept = nms(list(dets.values()), thr)
    print(f"threshold {thr}: keep {[names[id(d)] for d in kept]}")
