"""CSV formats: predictions, per-frame trace and precision curves."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import List, Sequence, Tuple

from ..boxes import Box
from ..engine import TraceRecord
from ..errors import LoadError

PRED_HEADER = ("frame", "x", "y", "w", "h", "state", "Mv")
TRACE_HEADER = ("frame", "phases", "state", "Mv", "tv", "cx", "cy",
                "candidate", "reliable", "gold")


def _fmt(v: float, digits: int) -> str:
    return f"{v:.{digits}f}"


def prediction_rows(boxes: Sequence[Box], trace: Sequence[TraceRecord]) -> List[Tuple[str, ...]]:
    rows = []
    for box, rec in zip(boxes, trace):
        rows.append((str(rec.frame), *(_fmt(v, 2) for v in box), rec.state.value,
                     _fmt(rec.M_v, 6)))
    return rows


def write_predictions(boxes, trace, out) -> None:
    """One line per frame: ``frame,x,y,w,h,state,Mv`` after a header."""
    _write(out, PRED_HEADER, prediction_rows(boxes, trace))


def read_predictions(path) -> List[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    return read_predictions_text(text, str(path))


def read_predictions_text(text: str, source: str = "<text>") -> List[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    try:
        return [{"frame": int(r["frame"]),
                 "box": Box(float(r["x"]), float(r["y"]), float(r["w"]), float(r["h"])),
                 "state": r.get("state", ""),
                 "Mv": float(r["Mv"]) if r.get("Mv") not in (None, "") else float("nan")}
                for r in rows]
    except (KeyError, ValueError) as exc:
        raise LoadError(f"{source}: malformed prediction file ({exc})") from exc


def write_trace(trace: Sequence[TraceRecord], out) -> None:
    rows = []
    for r in trace:
        c = r.counts
        rows.append((str(r.frame), r.phases, r.state.value, _fmt(r.M_v, 6), _fmt(r.t_v, 6),
                     str(r.center[0]), str(r.center[1]), str(c.get("candidate", 0)),
                     str(c.get("reliable", 0)), str(c.get("gold", 0))))
    _write(out, TRACE_HEADER, rows)


def write_curve(thresholds, precision, out) -> None:
    _write(out, ("threshold", "precision"),
           [(f"{t:g}", _fmt(p, 6)) for t, p in zip(thresholds, precision)])


def _write(out, header, rows) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            _write(fh, header, rows)
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
