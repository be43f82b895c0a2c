"""Annotated frame dumps: the predicted box drawn in a state color."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

STATE_COLORS = {"S": (0, 200, 0), "U": (0, 200, 0), "W": (255, 140, 0), "C": (220, 0, 0)}


def annotate(frame, box, phases: str) -> Image.Image:
    """Draw ``box``; the color follows the most severe state visited."""
    img = Image.fromarray(np.asarray(frame, dtype=np.uint8)).convert("RGB")
    key = "C" if "C" in phases else "W" if "W" in phases else "S"
    x, y, w, h = box
    ImageDraw.Draw(img).rectangle([x, y, x + w - 1, y + h - 1], outline=STATE_COLORS[key], width=2)
    return img


def dump_frame(directory, index: int, frame, box, phases: str) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{index + 1:04d}.png"
    annotate(frame, box, phases).save(path)
    return path
