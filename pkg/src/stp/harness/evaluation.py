"""Center-error precision (OTB protocol) and running a tracker over a sequence."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..boxes import Box
from ..engine import TraceRecord, Tracker
from ..errors import UsageError
from ..params import ParameterSet
from .sequences import SequenceSpec

THRESHOLDS = tuple(range(1, 51))
REFERENCE_PRECISION_20 = 0.787   # reference mean precision(20) printed by `stp bench`


@dataclass
class EvalResult:
    errors: np.ndarray
    thresholds: np.ndarray
    precision: np.ndarray
    trace: List[TraceRecord] = field(default_factory=list)
    fps: float = math.nan

    def at(self, threshold: float) -> float:
        return precision_at(self.errors, threshold)


def center_errors(predictions: Sequence, gt: Sequence) -> np.ndarray:
    """Euclidean distance between predicted and ground-truth box centers."""
    if len(predictions) != len(gt):
        raise UsageError(f"{len(predictions)} predictions for {len(gt)} ground-truth boxes")
    p = np.array([Box(*b).center for b in predictions], dtype=float).reshape(-1, 2)
    g = np.array([Box(*b).center for b in gt], dtype=float).reshape(-1, 2)
    return np.hypot(p[:, 0] - g[:, 0], p[:, 1] - g[:, 1])


def precision_at(errors: np.ndarray, threshold: float) -> float:
    errors = np.asarray(errors)
    if errors.size == 0:
        return math.nan
    return float(np.mean(errors <= threshold))


def evaluate(predictions: Sequence, gt: Sequence, thresholds=THRESHOLDS,
             mask: Optional[Sequence[bool]] = None) -> EvalResult:
    """Precision curve over ``thresholds``; ``mask`` selects the frames counted."""
    errors = center_errors(predictions, gt)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != errors.shape:
            raise UsageError("mask length differs from the number of frames")
        errors = errors[mask]
    th = np.asarray(thresholds, dtype=float)
    prec = np.array([precision_at(errors, t) for t in th])
    return EvalResult(errors, th, prec)


@dataclass
class RunResult:
    predictions: List[Box]
    trace: List[TraceRecord]
    fps: float


def run_tracker(seq: SequenceSpec, params: Optional[ParameterSet] = None,
                on_frame=None) -> RunResult:
    """Track ``seq`` from its first box. ``on_frame(i, frame, box, record)``
    is called after every frame. FPS excludes the first frame."""
    tracker = Tracker(params or ParameterSet())
    first = seq.frame(0)
    box = tracker.init(first, seq.boxes[0])
    preds = [box]
    if on_frame:
        on_frame(0, first, box, tracker.trace[-1])
    t0 = time.perf_counter()
    for i in range(1, len(seq)):
        frame = seq.frame(i)
        box = tracker.update(frame)
        preds.append(box)
        if on_frame:
            on_frame(i, frame, box, tracker.trace[-1])
    elapsed = time.perf_counter() - t0
    fps = (len(seq) - 1) / elapsed if len(seq) > 1 and elapsed > 0 else math.nan
    return RunResult(preds, list(tracker.trace), fps)


def evaluate_run(seq: SequenceSpec, run: RunResult, exclude_occluded: bool = True,
                 thresholds=THRESHOLDS) -> EvalResult:
    """Evaluate on the frames that have ground truth (and are visible)."""
    n = seq.n_evaluated
    mask = None
    if exclude_occluded and seq.occluded:
        mask = [not o for o in seq.occluded[:n]]
    res = evaluate(run.predictions[:n], seq.boxes[:n], thresholds, mask)
    res.trace = run.trace
    res.fps = run.fps
    return res
