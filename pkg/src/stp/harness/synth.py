"""Deterministic synthetic sequences with exact ground truth.

A textured object is pasted on a cluttered background and moved by a
motion script. Optional scripts hide it (occlusion), modulate its
brightness (illumination) or morph its texture into a second one
(appearance drift). Frame numbers in scripts are 1-based.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from ..boxes import Box
from ..errors import ConfigError
from .sequences import SequenceSpec

MOTIONS = ("static", "linear", "bounce", "random_walk")


@dataclass
class SynthConfig:
    seed: int = 0
    length: int = 100
    frame_size: Tuple[int, int] = (240, 320)     # (height, width)
    object_size: Tuple[int, int] = (64, 64)      # (height, width)
    start: Optional[Tuple[int, int]] = None      # top-left (x, y); default centered
    motion: str = "static"
    velocity: Tuple[float, float] = (0.0, 0.0)   # px/frame for linear and bounce
    max_step: int = 3                            # random_walk bound per axis
    occlusions: List[Tuple[int, int]] = field(default_factory=list)   # inclusive frame ranges
    jumps: List[Tuple[int, int, int]] = field(default_factory=list)   # (frame, dx, dy)
    illumination: float = 0.0                    # relative brightness amplitude
    illumination_period: float = 50.0
    drift: float = 0.0                           # texture morph per frame, 0..1
    texture_sigma: float = 3.0
    background_sigma: float = 1.5
    background_contrast: float = 1.0
    name: str = "synthetic"

    def __post_init__(self):
        self.frame_size = tuple(int(v) for v in self.frame_size)
        self.object_size = tuple(int(v) for v in self.object_size)
        self.velocity = tuple(float(v) for v in self.velocity)
        if self.start is not None:
            self.start = tuple(int(v) for v in self.start)
        self.occlusions = [tuple(int(v) for v in o) for o in self.occlusions]
        self.jumps = [tuple(int(v) for v in j) for j in self.jumps]

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown synth keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad synth config: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "SynthConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read synth config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def _texture(rng, shape, sigma, contrast=1.0) -> np.ndarray:
    """Smooth color noise in [0, 1], shape (h, w, 3)."""
    noise = rng.standard_normal(shape + (3,))
    smooth = gaussian_filter(noise, (sigma, sigma, 0)) if sigma > 0 else noise
    smooth /= smooth.std() + 1e-12
    return np.clip(0.5 + 0.18 * contrast * smooth, 0.0, 1.0)


def _background(rng, shape, sigma, contrast) -> np.ndarray:
    bg = 0.6 * _texture(rng, shape, 4 * sigma, contrast) + 0.4 * _texture(rng, shape, sigma, contrast)
    # clutter: flat rectangles with sharp edges
    h, w = shape
    for _ in range(int(h * w / 2500)):
        rh, rw = rng.integers(6, 30, size=2)
        y, x = rng.integers(0, h - rh), rng.integers(0, w - rw)
        bg[y:y + rh, x:x + rw] = rng.uniform(0.1, 0.9, size=3)
    return bg


def _validate(cfg: SynthConfig) -> None:
    H, W = cfg.frame_size
    h, w = cfg.object_size
    if cfg.length < 1:
        raise ConfigError("length must be at least 1")
    if h < 1 or w < 1 or h > H or w > W:
        raise ConfigError(f"object {h}x{w} does not fit frame {H}x{W}")
    if cfg.motion not in MOTIONS:
        raise ConfigError(f"motion must be one of {MOTIONS}, got {cfg.motion!r}")
    for a, b in cfg.occlusions:
        if not 1 <= a <= b <= cfg.length:
            raise ConfigError(f"occlusion range {a}-{b} outside frames 1..{cfg.length}")
        if a == 1:
            raise ConfigError("the object must be visible in the first frame")
    for fr, _, _ in cfg.jumps:
        if not 2 <= fr <= cfg.length:
            raise ConfigError(f"jump at frame {fr} outside frames 2..{cfg.length}")
    if not 0.0 <= cfg.drift <= 1.0:
        raise ConfigError("drift must be in [0, 1]")
    if abs(cfg.illumination) >= 1.0:
        raise ConfigError("illumination amplitude must be below 1")


def trajectory(cfg: SynthConfig) -> List[Tuple[int, int]]:
    """Top-left positions, one per frame."""
    _validate(cfg)
    H, W = cfg.frame_size
    h, w = cfg.object_size
    rng = np.random.default_rng([cfg.seed, 1])
    x, y = cfg.start if cfg.start is not None else ((W - w) // 2, (H - h) // 2)
    if not (0 <= x <= W - w and 0 <= y <= H - h):
        raise ConfigError(f"start {(x, y)} puts the object outside the frame")
    fx, fy = float(x), float(y)
    vx, vy = cfg.velocity
    jumps = {fr: (dx, dy) for fr, dx, dy in cfg.jumps}
    out = [(x, y)]
    for t in range(2, cfg.length + 1):
        if cfg.motion == "linear":
            fx, fy = fx + vx, fy + vy
        elif cfg.motion == "bounce":
            fx, fy = fx + vx, fy + vy
            if fx < 0 or fx > W - w:
                vx = -vx
                fx = min(max(fx, 0), W - w)
            if fy < 0 or fy > H - h:
                vy = -vy
                fy = min(max(fy, 0), H - h)
        elif cfg.motion == "random_walk":
            dx, dy = rng.integers(-cfg.max_step, cfg.max_step + 1, size=2)
            fx = min(max(fx + dx, 0), W - w)
            fy = min(max(fy + dy, 0), H - h)
        if t in jumps:
            fx = fx + jumps[t][0]
            fy = fy + jumps[t][1]
        px, py = int(round(fx)), int(round(fy))
        if not (0 <= px <= W - w and 0 <= py <= H - h):
            raise ConfigError(f"frame {t}: motion script moves the object out of the frame")
        out.append((px, py))
    return out


def synth_sequence(cfg: SynthConfig) -> SequenceSpec:
    """Render the configured sequence; identical output for identical config."""
    path = trajectory(cfg)
    H, W = cfg.frame_size
    h, w = cfg.object_size
    rng = np.random.default_rng([cfg.seed, 0])
    background = _background(rng, (H, W), cfg.background_sigma, cfg.background_contrast)
    tex_a = _texture(rng, (h, w), cfg.texture_sigma)
    tex_b = _texture(rng, (h, w), cfg.texture_sigma)
    hidden = set()
    for a, b in cfg.occlusions:
        hidden.update(range(a, b + 1))
    frames, boxes, occluded = [], [], []
    for t, (x, y) in enumerate(path, start=1):
        img = background.copy()
        if t not in hidden:
            alpha = min(1.0, cfg.drift * (t - 1))
            obj = (1.0 - alpha) * tex_a + alpha * tex_b
            gain = 1.0 + cfg.illumination * np.sin(2 * np.pi * (t - 1) / cfg.illumination_period)
            img[y:y + h, x:x + w] = np.clip(obj * gain, 0.0, 1.0)
        frames.append(np.round(img * 255).astype(np.uint8))
        boxes.append(Box(x, y, w, h))
        occluded.append(t in hidden)
    return SequenceSpec(cfg.name, frames, boxes, occluded)
