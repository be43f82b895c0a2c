"""Command line: ``stp track | eval | synth | selftest | bench``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import List, Optional

from ..errors import STPError
from ..params import ABLATIONS, ParameterSet
from . import csvio
from .evaluation import REFERENCE_PRECISION_20, evaluate, evaluate_run, run_tracker
from .render import dump_frame
from .selftest import run_selftest
from .sequences import load_sequence, parse_boxes, write_sequence
from .synth import SynthConfig, synth_sequence


def _params(args) -> ParameterSet:
    params = ParameterSet.from_file(args.params) if args.params else ParameterSet()
    if args.ablation:
        params = params.replace(ablation=args.ablation)
    return params


def cmd_track(args) -> int:
    seq = load_sequence(args.seq_dir)
    params = _params(args)

    def on_frame(i, frame, box, record):
        if args.dump_frames:
            dump_frame(args.dump_frames, i, frame, box, record.phases)
        if args.verbose:
            print(f"{record.frame:5d} {record.phases:3s} Mv={record.M_v:8.3f} "
                  f"tv={record.t_v:7.3f} {record.counts}", file=sys.stderr)

    run = run_tracker(seq, params, on_frame)
    if args.out:
        csvio.write_predictions(run.predictions, run.trace, args.out)
    else:
        csvio.write_predictions(run.predictions, run.trace, sys.stdout)
    if args.trace:
        csvio.write_trace(run.trace, args.trace)
    res = evaluate_run(seq, run)
    print(f"{seq.name}: precision(20)={res.at(20):.3f} fps={run.fps:.1f}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    preds = [r["box"] for r in csvio.read_predictions(args.pred)]
    try:
        gt = parse_boxes(Path(args.gt).read_text(), str(args.gt))
    except OSError as exc:
        print(f"error: cannot read {args.gt}: {exc}", file=sys.stderr)
        return 1
    n = min(len(preds), len(gt))
    if len(preds) != len(gt):
        warnings.warn(f"{len(preds)} predictions vs {len(gt)} boxes; evaluating {n}")
    res = evaluate(preds[:n], gt[:n])
    print(f"precision(20)={res.at(20):.3f}")
    if args.curve:
        csvio.write_curve(res.thresholds, res.precision, args.curve)
    return 0


def cmd_synth(args) -> int:
    seq = synth_sequence(SynthConfig.from_file(args.config))
    out = write_sequence(seq, args.out_dir)
    print(f"wrote {len(seq)} frames to {out}")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args) -> int:
    """Mean precision(20) over every sequence directory under ``root``."""
    root = Path(args.root)
    dirs = sorted(p for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
    if not dirs:
        print(f"error: no sequence directories under {root}", file=sys.stderr)
        return 1
    params = _params(args)
    scores = []
    for d in dirs:
        try:
            seq = load_sequence(d)
        except STPError as exc:
            print(f"skip {d.name}: {exc}", file=sys.stderr)
            continue
        res = evaluate_run(seq, run_tracker(seq, params), exclude_occluded=False)
        scores.append(res.at(20))
        print(f"{seq.name}: precision(20)={scores[-1]:.3f} fps={res.fps:.1f}")
    if not scores:
        return 1
    mean = sum(scores) / len(scores)
    print(f"mean precision(20)={mean:.3f} over {len(scores)} sequences "
          f"(reference {REFERENCE_PRECISION_20:.3f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stp", description="Part-based tracker and evaluation tools.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="track a sequence directory")
    t.add_argument("seq_dir")
    t.add_argument("--params", help="key=value parameter file")
    t.add_argument("--ablation", choices=ABLATIONS)
    t.add_argument("--dump-frames", metavar="DIR")
    t.add_argument("--trace", metavar="CSV")
    t.add_argument("--out", metavar="CSV", help="predictions file (default stdout)")
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("eval", help="precision of a prediction file")
    e.add_argument("pred")
    e.add_argument("gt")
    e.add_argument("--curve", metavar="CSV")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="render a synthetic sequence from a JSON config")
    s.add_argument("config")
    s.add_argument("out_dir")
    s.set_defaults(func=cmd_synth)

    sub.add_parser("selftest", help="classifier-bank oracle checks").set_defaults(func=cmd_selftest)

    b = sub.add_parser("bench", help="mean precision over an OTB-style root (informational)")
    b.add_argument("root")
    b.add_argument("--params")
    b.add_argument("--ablation", choices=ABLATIONS)
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (STPError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
