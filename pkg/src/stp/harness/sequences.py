"""Sequences on disk (OTB layout) and in memory."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from PIL import Image

from ..boxes import Box
from ..errors import LoadError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".ppm", ".pgm")
GT_NAMES = ("groundtruth_rect.txt", "groundtruth.txt")


@dataclass
class SequenceSpec:
    """Frames plus ground truth. ``frames`` holds arrays or image paths."""

    name: str
    frames: List[object]
    boxes: List[Box]
    occluded: List[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.frames:
            raise LoadError(f"sequence {self.name!r} has no frames")
        if not self.boxes:
            raise LoadError(f"sequence {self.name!r} has no first box")

    def __len__(self) -> int:
        return len(self.frames)

    def frame(self, i: int) -> np.ndarray:
        f = self.frames[i]
        if isinstance(f, (str, Path)):
            return read_image(f)
        return f

    def __iter__(self):
        for i in range(len(self.frames)):
            yield self.frame(i)

    @property
    def n_evaluated(self) -> int:
        """Frames that have ground truth."""
        return min(len(self.frames), len(self.boxes))


def read_image(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            return np.asarray(im)
    except (OSError, ValueError) as exc:
        raise LoadError(f"cannot read frame {path}: {exc}") from exc


def parse_boxes(text: str, source: str = "<text>") -> List[Box]:
    boxes = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = [p for p in re.split(r"[,\t ]+", line) if p]
        if len(parts) != 4:
            raise LoadError(f"{source}:{lineno}: expected x,y,w,h, got {line!r}")
        try:
            boxes.append(Box(*(float(p) for p in parts)))
        except ValueError:
            raise LoadError(f"{source}:{lineno}: non-numeric box {line!r}") from None
    return boxes


def _frame_number(path: Path) -> int:
    digits = re.findall(r"\d+", path.stem)
    return int(digits[-1]) if digits else -1


def load_sequence(directory) -> SequenceSpec:
    """Load an OTB-style sequence: ``img/`` of numbered frames and a
    ground-truth file with one ``x,y,w,h`` box per line (top-left corner,
    coordinates taken as given)."""
    root = Path(directory)
    if not root.is_dir():
        raise LoadError(f"{root}: not a directory")
    img_dir = root / "img"
    if not img_dir.is_dir():
        img_dir = root
    frames = sorted((p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
                    key=lambda p: (_frame_number(p), p.name))
    if not frames:
        raise LoadError(f"{img_dir}: no image frames")
    gt_path = next((root / n for n in GT_NAMES if (root / n).is_file()), None)
    if gt_path is None:
        raise LoadError(f"{root}: no ground-truth file ({' or '.join(GT_NAMES)})")
    boxes = parse_boxes(gt_path.read_text(), str(gt_path))
    if not boxes:
        raise LoadError(f"{gt_path}: missing first box")
    if len(boxes) != len(frames):
        log.warning("%s: %d boxes for %d frames; evaluating the overlap",
                    root.name, len(boxes), len(frames))
    return SequenceSpec(root.name, frames, boxes, load_occlusion(root) or [])


def format_box(box: Sequence[float]) -> str:
    return ",".join(f"{v:g}" for v in box)


def write_sequence(seq: SequenceSpec, directory) -> Path:
    """Write frames as PNG under ``img/`` and the boxes to ``groundtruth_rect.txt``."""
    root = Path(directory)
    img_dir = root / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq):
        Image.fromarray(np.asarray(frame, dtype=np.uint8)).save(img_dir / f"{i + 1:04d}.png")
    (root / "groundtruth_rect.txt").write_text(
        "".join(format_box(b) + "\n" for b in seq.boxes))
    if seq.occluded:
        (root / "occlusion.txt").write_text("".join(f"{int(o)}\n" for o in seq.occluded))
    return root


def load_occlusion(directory) -> Optional[List[bool]]:
    path = Path(directory) / "occlusion.txt"
    if not path.is_file():
        return None
    return [bool(int(v)) for v in path.read_text().split()]
