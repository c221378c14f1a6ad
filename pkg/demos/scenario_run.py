"""Run the bundled drowsy scenario end to end and print the alert transitions.

Run: python3 demos/scenario_run.py [safe_driving|drowsy|distracted]
"""
import sys

from drivermon.pipeline import run_scenario
from drivermon.scenarios import bundled_scenario

kind = sys.argv[1] if len(sys.argv) > 1 else "drowsy"
records = bundled_scenario(kind)
logs = run_scenario(records, workers=2)
print(f"{kind}: {len(records)} frames at 20 FPS")
for rec in logs:
    for ev in rec.events:
        print(f"  frame {rec.frame:5d}  t={rec.t_ms / 1000:6.2f}s  {ev['from']:>13} -> {ev['to']:<13} ({ev['cause']})")
print(f"final phase: {logs[-1].phase}")
