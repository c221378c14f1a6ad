"""PERCLOS over a sliding window: a driver whose eyes start drooping halfway through.

Run: python3 demos/perclos_window.py
"""
from drivermon.decision import SlidingWindow, perclos, tiered_score
from drivermon.errors import EmptyWindow

WINDOW_MS = 10_000
win = SlidingWindow(WINDOW_MS)

try:
    perclos(win, 0)
except EmptyWindow:
    print("empty window: no estimate yet")

# 20 FPS for 40 s; after 20 s the eyes are closed 60% of the time
for i in range(800):
    t = i * 50
    closed = (t % 1000) < (600 if t >= 20_000 else 80)
    win.add(t, observed=True, closed=closed)
    if t % 5000 == 0:
        v = perclos(win, t)
        flag = "" if v.sufficient else "  (insufficient coverage)"
        print(f"t={t / 1000:5.1f}s  PERCLOS {v.percent:5.1f}%  tier {tiered_score(v.percent, 15, 30)}{flag}")
