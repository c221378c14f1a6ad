"""Command-line entry point: ``drivermon {run,bench,model-info,eval}``.

Exit codes: 0 success, 2 input/data error, 3 config error. ``DMS_LOG``
(a logging level name such as ``DEBUG``) sets diagnostic verbosity.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, DmsError, ParseError
from .formats import read_scenario, write_jsonl
from .metrics import evaluate
from .micronet import bundled_spec, load_model_spec
from .micronet.accounting import report
from .pipeline import run_scenario, simulate_latency

log = logging.getLogger("drivermon")

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 2, 3


def _setup_logging():
    level = os.environ.get("DMS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "interval", None) is not None and not isinstance(args.interval, list):
        if args.interval < 1:
            raise ConfigError("--interval must be >= 1", "tracker.detection_interval")
        cfg = cfg.replace(tracker=dataclasses.replace(cfg.tracker, detection_interval=args.interval))
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    records = read_scenario(args.scenario)
    workers = args.workers if args.workers is not None else cfg.pipeline.workers
    log.info("running %d frames, N=%d, workers=%d", len(records),
             cfg.tracker.detection_interval, workers)
    logs = run_scenario(records, cfg, workers=workers, seed=args.seed)
    if args.out in (None, "-"):
        write_jsonl(sys.stdout, logs)
    else:
        write_jsonl(args.out, logs)
    if logs:
        log.info("final phase %s (cause %s)", logs[-1].phase, logs[-1].cause)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    rows = [simulate_latency(cfg.latency, n, args.frames) for n in args.interval]
    if args.format == "json":
        print(json.dumps({"per_frame_ms": cfg.latency.per_frame, "detect_ms": cfg.latency.detect,
                          "rows": [r.to_json() for r in rows]}, indent=2))
    else:
        print(f"{'N':>3}  {'mean_ms':>9}  {'p50_ms':>8}  {'p95_ms':>8}  {'max_ms':>8}")
        for r in rows:
            print(f"{r.interval:>3}  {r.mean:>9.2f}  {r.p50:>8.2f}  {r.p95:>8.2f}  {r.max:>8.2f}")
    return EXIT_OK


def _load_spec(ref: str):
    if not Path(ref).exists() and ref in ("tiny", "small", "large"):
        return bundled_spec(ref)
    try:
        return load_model_spec(ref)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{ref}: {exc.msg}", exc.lineno) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{ref}: invalid model spec: {exc}") from exc


def cmd_model_info(args) -> int:
    rep = report(_load_spec(args.spec))
    if args.format == "json":
        print(json.dumps(rep, indent=2))
        return EXIT_OK
    c, h, w = rep["input"]
    print(f"model {rep['name']}  input {c}x{h}x{w}")
    print(f"{'layer':<22} {'kind':<10} {'out':>9} {'params':>10} {'MACs':>13}")
    for l in rep["layers"]:
        out = "x".join(map(str, l["out_hw"])) if l["out_hw"] else "-"
        print(f"{l['name']:<22} {l['kind']:<10} {out:>9} {l['params']:>10,} {l['macs']:>13,}")
    print(f"total params {rep['total_params']:,}  MACs {rep['total_macs']:,} "
          f"({rep['total_macs'] / 1e9:.4f} GMACs)")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    preds, gts = read_scenario(args.pred), read_scenario(args.gt)
    if len(preds) != len(gts):
        raise ValueError(f"misaligned files: {len(preds)} predictions vs {len(gts)} ground truth")
    use = [p.landmarks is not None and g.landmarks is not None for p, g in zip(preds, gts)]
    rep = evaluate([p.to_indicators() for p in preds], [g.to_indicators() for g in gts],
                   cfg.landmarks, cfg.pipeline.eval_eye_threshold, use)
    if args.format == "json":
        print(json.dumps(rep, indent=2))
    else:
        nme = "n/a" if rep["nme"] is None else f"{rep['nme']:.6f}"
        print(f"records {rep['count']}")
        print(f"NME {nme}")
        print(f"eye accuracy {rep['eyes']:.4f}")
        print(f"mouth accuracy {rep['mouth']:.4f}")
        for k, v in rep["head_deg"].items():
            print(f"{k} error {v:.3f} deg")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drivermon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file through the pipeline")
    r.add_argument("scenario")
    r.add_argument("--config")
    r.add_argument("--out", help="state log path (default: stdout)")
    r.add_argument("--interval", type=int, help="override the detection interval N")
    r.add_argument("--seed", type=int, help="override the detection-noise seed")
    r.add_argument("--workers", type=int, help="perception worker threads")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="simulate latency against the detection interval")
    b.add_argument("--config")
    b.add_argument("--interval", type=int, nargs="+", default=[1, 2, 4, 8])
    b.add_argument("--frames", type=int, default=1000)
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.set_defaults(func=cmd_bench)

    m = sub.add_parser("model-info", help="parameter and MAC report for a model spec")
    m.add_argument("spec", help="model spec JSON path, or tiny/small/large")
    m.add_argument("--format", choices=("text", "json"), default="text")
    m.set_defaults(func=cmd_model_info)

    e = sub.add_parser("eval", help="compare a prediction file against ground truth")
    e.add_argument("pred")
    e.add_argument("gt")
    e.add_argument("--config")
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DmsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
