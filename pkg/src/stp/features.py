"""Seven-channel pixel features, patch descriptors and edge density.

A frame is turned into a :class:`ChannelStack` holding the three color
channels (scaled to [0, 1]) followed by four absolute directional
derivatives of the gray level at orientations 0, pi/4, pi/2 and 3pi/4.
Descriptors are raw stack values inside a patch window, concatenated
channel-major (all of channel 0, then channel 1, ...), row-major inside
each channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import uniform_filter

from .errors import InvalidInputError, OutOfBoundsError

N_CHANNELS = 7
N_COLOR = 3
ORIENTATIONS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)

# (dx, dy) neighbor step for each orientation; y grows downwards.
_ORIENTATION_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1))


@dataclass(frozen=True, eq=False)
class ChannelStack:
    """Per-frame feature planes, shape ``(7, height, width)``."""

    planes: np.ndarray
    _pooled: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        p = self.planes
        if p.ndim != 3 or p.shape[0] != N_CHANNELS:
            raise InvalidInputError(f"expected (7, H, W) planes, got {p.shape}")
        if p.shape[1] < 1 or p.shape[2] < 1:
            raise InvalidInputError("empty channel stack")

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @property
    def color(self) -> np.ndarray:
        return self.planes[:N_COLOR]

    @property
    def gradients(self) -> np.ndarray:
        return self.planes[N_COLOR:]

    def source(self, step: int, dtype=np.float64) -> np.ndarray:
        """Planes to sample for a patch geometry with the given step.

        For ``step > 1`` the planes are box-averaged over ``step x step``
        first so that subsampled patches see area averages, not aliases.
        """
        key = (step, np.dtype(dtype).str)
        if key not in self._pooled:
            if step == 1:
                planes = self.planes
            else:
                planes = self.source(step) if dtype != np.float64 else uniform_filter(
                    self.planes, size=(1, step, step), mode="nearest")
            self._pooled[key] = planes.astype(dtype, copy=False)
        return self._pooled[key]

    def __add__(self, other: "ChannelStack") -> "ChannelStack":
        return ChannelStack(self.planes + other.planes)

    def __rmul__(self, a: float) -> "ChannelStack":
        return ChannelStack(a * self.planes)


@dataclass(frozen=True)
class PatchGeometry:
    """Sampling pattern of a patch: ``rows x cols`` samples, ``step`` apart.

    Small parts use square geometries with ``step == 1``. The full-box
    geometry subsamples the bounding box so that its descriptor length
    stays bounded.
    """

    rows: int
    cols: int
    step: int = 1
    label: str = ""

    @classmethod
    def square(cls, side: int) -> "PatchGeometry":
        if side < 1:
            raise InvalidInputError(f"patch side must be positive, got {side}")
        return cls(side, side, 1, str(side))

    @classmethod
    def full_box(cls, height: int, width: int, max_side: int = 40) -> "PatchGeometry":
        step = max(1, math.ceil(max(height, width) / max_side))
        return cls(max(1, height // step), max(1, width // step), step, "full")

    @property
    def span(self) -> Tuple[int, int]:
        """Extent in pixels (height, width) covered by the samples."""
        return ((self.rows - 1) * self.step + 1, (self.cols - 1) * self.step + 1)

    @property
    def length(self) -> int:
        return N_CHANNELS * self.rows * self.cols

    def top_left(self, center: Tuple[int, int]) -> Tuple[int, int]:
        """Top-left pixel (x, y) of the window centered at ``center``."""
        sh, sw = self.span
        return center[0] - sw // 2, center[1] - sh // 2


@dataclass(frozen=True, eq=False)
class PatchDescriptor:
    values: np.ndarray
    center: Tuple[int, int]
    geometry: PatchGeometry

    @property
    def side(self) -> int:
        return self.geometry.rows


def _as_float_rgb(frame) -> np.ndarray:
    a = np.asarray(frame)
    if a.size == 0:
        raise InvalidInputError("empty frame")
    if a.ndim == 2:
        a = np.repeat(a[:, :, None], 3, axis=2)
    elif a.ndim == 3 and a.shape[2] == 1:
        a = np.repeat(a, 3, axis=2)
    elif a.ndim == 3 and a.shape[2] == 4:
        a = a[:, :, :3]
    if a.ndim != 3 or a.shape[2] != 3:
        raise InvalidInputError(f"unsupported frame shape {np.shape(frame)}")
    if np.issubdtype(a.dtype, np.integer):
        return a.astype(np.float64) / 255.0
    a = a.astype(np.float64)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("frame contains non-finite values")
    return a


def directional_gradients(gray: np.ndarray) -> np.ndarray:
    """Absolute central-difference derivatives along the four orientations.

    Borders use edge replication, so a constant image gives exactly zero.
    """
    g = np.pad(gray, 1, mode="edge")
    h, w = gray.shape
    out = np.empty((4, h, w))
    for n, (dx, dy) in enumerate(_ORIENTATION_STEPS):
        fwd = g[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        bwd = g[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        out[n] = np.abs(fwd - bwd) / (2.0 * math.hypot(dx, dy))
    return out


def build_channel_stack(frame) -> ChannelStack:
    """Build the 7-plane stack of an RGB or grayscale raster."""
    rgb = _as_float_rgb(frame)
    planes = np.empty((N_CHANNELS,) + rgb.shape[:2])
    planes[:N_COLOR] = np.moveaxis(rgb, 2, 0)
    planes[N_COLOR:] = directional_gradients(rgb.mean(axis=2))
    return ChannelStack(planes)


def _as_geometry(side) -> PatchGeometry:
    if isinstance(side, PatchGeometry):
        return side
    return PatchGeometry.square(int(side))


def clamp_center(stack: ChannelStack, center, geometry: PatchGeometry) -> Tuple[int, int]:
    """Move ``center`` so that the whole window fits in the frame.

    Raises :class:`OutOfBoundsError` if the window does not overlap the
    frame at all, or cannot fit in it.
    """
    sh, sw = geometry.span
    if sh > stack.height or sw > stack.width:
        raise OutOfBoundsError(f"{sh}x{sw} window larger than {stack.height}x{stack.width} frame")
    cx, cy = int(round(center[0])), int(round(center[1]))
    x0, y0 = geometry.top_left((cx, cy))
    if x0 + sw <= 0 or y0 + sh <= 0 or x0 >= stack.width or y0 >= stack.height:
        raise OutOfBoundsError(f"window at {center} lies outside the frame")
    x0c = min(max(x0, 0), stack.width - sw)
    y0c = min(max(y0, 0), stack.height - sh)
    return cx + (x0c - x0), cy + (y0c - y0)


def extract_descriptor(stack: ChannelStack, center, side) -> PatchDescriptor:
    """Vectorize the patch around ``center`` (clamped into the frame)."""
    geometry = _as_geometry(side)
    c = clamp_center(stack, center, geometry)
    x0, y0 = geometry.top_left(c)
    sh, sw = geometry.span
    st = geometry.step
    src = stack.source(st)
    block = src[:, y0:y0 + sh:st, x0:x0 + sw:st]
    return PatchDescriptor(block.ravel().copy(), c, geometry)


def center_blocks(values: np.ndarray, n_blocks: int = N_CHANNELS) -> np.ndarray:
    """Subtract the mean of every channel block; works row-wise on 2-D input."""
    v = np.asarray(values, dtype=np.float64)
    shaped = v.reshape(v.shape[:-1] + (n_blocks, -1))
    return (shaped - shaped.mean(axis=-1, keepdims=True)).reshape(v.shape)


def valid_center_range(stack: ChannelStack, geometry: PatchGeometry):
    """Inclusive-exclusive (x0, x1, y0, y1) of centers whose window fits."""
    sh, sw = geometry.span
    return sw // 2, stack.width - sw + sw // 2 + 1, sh // 2, stack.height - sh + sh // 2 + 1


def dense_descriptors(stack: ChannelStack, geometry: PatchGeometry,
                      x0: int, x1: int, y0: int, y1: int, dtype=np.float64) -> np.ndarray:
    """Descriptors of every center in ``[x0, x1) x [y0, y1)`` as an
    ``(y1 - y0, x1 - x0, k)`` array. All windows must fit in the frame."""
    vx0, vx1, vy0, vy1 = valid_center_range(stack, geometry)
    if x0 < vx0 or y0 < vy0 or x1 > vx1 or y1 > vy1:
        raise OutOfBoundsError("dense window leaves the valid center range")
    sh, sw = geometry.span
    st = geometry.step
    ox, oy = geometry.top_left((x0, y0))
    src = stack.source(st, dtype)[:, oy:oy + (y1 - y0) + sh - 1, ox:ox + (x1 - x0) + sw - 1]
    view = sliding_window_view(src, (sh, sw), axis=(1, 2))[..., ::st, ::st]
    # (7, ny, nx, r, c) -> (ny, nx, 7, r, c) keeps channel-major order per row
    view = view.transpose(1, 2, 0, 3, 4)
    return np.ascontiguousarray(view).reshape(y1 - y0, x1 - x0, geometry.length)


def box_sum(plane: np.ndarray, height: int, width: int | None = None) -> np.ndarray:
    """Sum over the ``height x width`` window centered at each pixel.

    Windows are clipped at the frame border. Uses a summed-area table.
    """
    width = height if width is None else width
    h, w = plane.shape
    sat = np.zeros((h + 1, w + 1))
    sat[1:, 1:] = plane.cumsum(0).cumsum(1)
    ys = np.arange(h)
    xs = np.arange(w)
    top = np.clip(ys - height // 2, 0, h)
    bot = np.clip(ys - height // 2 + height, 0, h)
    left = np.clip(xs - width // 2, 0, w)
    right = np.clip(xs - width // 2 + width, 0, w)
    return (sat[bot][:, right] - sat[top][:, right]
            - sat[bot][:, left] + sat[top][:, left])


def edge_density_map(stack: ChannelStack, window) -> np.ndarray:
    """Sum of the four gradient planes over a window centered at each pixel."""
    if isinstance(window, PatchGeometry):
        wh, ww = window.span
    else:
        wh = ww = int(window)
    if wh < 1 or ww < 1 or wh > stack.height or ww > stack.width:
        raise InvalidInputError(f"window {wh}x{ww} does not fit {stack.height}x{stack.width}")
    dens = box_sum(stack.gradients.sum(axis=0), wh, ww)
    # summed-area differences can leave -1e-16 residue
    return np.maximum(dens, 0.0)
