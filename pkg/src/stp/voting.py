"""Activation maps, the accumulated center vote and part agreement.

A region is a rectangle of candidate object centers ``(x0, y0, x1, y1)``,
exclusive on the right/bottom, in frame coordinates. A part's activation at
center ``c`` is its response on the patch at ``c + offset``; locations
whose patch leaves the frame get ``-inf``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from .features import ChannelStack, dense_descriptors, valid_center_range

# floats per descriptor chunk in the dense evaluation
_CHUNK = 1 << 22


class Region(NamedTuple):
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def shape(self) -> Tuple[int, int]:
        return self.y1 - self.y0, self.x1 - self.x0

    @classmethod
    def around(cls, center, delta: int, stack: ChannelStack) -> "Region":
        """Centers within ``delta`` of ``center`` per axis, clipped to the frame."""
        cx, cy = int(center[0]), int(center[1])
        x0 = min(max(cx - delta, 0), stack.width - 1)
        y0 = min(max(cy - delta, 0), stack.height - 1)
        x1 = max(min(cx + delta + 1, stack.width), x0 + 1)
        y1 = max(min(cy + delta + 1, stack.height), y0 + 1)
        return cls(x0, y0, x1, y1)

    @classmethod
    def whole(cls, stack: ChannelStack) -> "Region":
        return cls(0, 0, stack.width, stack.height)


@dataclass(frozen=True, eq=False)
class VoteMap:
    region: Region
    raw: np.ndarray          # summed shifted activations, before smoothing
    values: np.ndarray       # after Gaussian smoothing
    peak: Tuple[int, int]    # (x, y) in frame coordinates
    peak_value: float        # M_v


def first_argmax(values: np.ndarray) -> Tuple[int, int]:
    """(row, col) of the maximum; ties go to the lowest row, then column."""
    return np.unravel_index(int(np.argmax(values)), values.shape)


def _dense_responses(stack, geometry, kernels, x0, x1, y0, y1) -> np.ndarray:
    """Responses of ``kernels`` (k x P) for all centers of a valid window.

    Evaluated in single precision; the maps only feed argmax and sums.
    """
    ny, nx = y1 - y0, x1 - x0
    out = np.empty((kernels.shape[1], ny, nx))
    K = np.ascontiguousarray(kernels, dtype=np.float32)
    rows = max(1, _CHUNK // max(nx * geometry.length, 1))
    for r0 in range(0, ny, rows):
        r1 = min(r0 + rows, ny)
        block = dense_descriptors(stack, geometry, x0, x1, y0 + r0, y0 + r1, np.float32)
        resp = block.reshape(-1, geometry.length) @ K
        out[:, r0:r1, :] = resp.T.reshape(-1, r1 - r0, nx)
    return out


def activation_maps(parts: Sequence, stack: ChannelStack, region: Region) -> Dict[int, np.ndarray]:
    """Activation map over ``region`` for each part, keyed by part id.

    Parts sharing a patch geometry are evaluated together: the patches
    of the union of their shifted regions are vectorized once and
    multiplied by all their classifiers.
    """
    groups: Dict[object, list] = {}
    for p in parts:
        groups.setdefault(p.geometry, []).append(p)
    ry, rx = region.shape
    out: Dict[int, np.ndarray] = {}
    for geometry, members in groups.items():
        vx0, vx1, vy0, vy1 = valid_center_range(stack, geometry)
        dxs = [p.offset[0] for p in members]
        dys = [p.offset[1] for p in members]
        ux0 = max(region.x0 + min(dxs), vx0)
        ux1 = min(region.x1 + max(dxs), vx1)
        uy0 = max(region.y0 + min(dys), vy0)
        uy1 = min(region.y1 + max(dys), vy1)
        if ux0 < ux1 and uy0 < uy1:
            K = np.stack([p.kernel for p in members], axis=1)
            field = _dense_responses(stack, geometry, K, ux0, ux1, uy0, uy1)
        else:
            field = None
        for n, p in enumerate(members):
            amap = np.full((ry, rx), -np.inf)
            if field is not None:
                # patch centers for this part, clipped to the evaluated union
                px0, py0 = region.x0 + p.offset[0], region.y0 + p.offset[1]
                sx0, sx1 = max(px0, ux0), min(px0 + rx, ux1)
                sy0, sy1 = max(py0, uy0), min(py0 + ry, uy1)
                if sx0 < sx1 and sy0 < sy1:
                    amap[sy0 - py0:sy1 - py0, sx0 - px0:sx1 - px0] = \
                        field[n, sy0 - uy0:sy1 - uy0, sx0 - ux0:sx1 - ux0]
            out[p.id] = amap
    return out


def part_activation(part, stack: ChannelStack, region: Region) -> np.ndarray:
    """Activation map of a single part over ``region``."""
    return activation_maps([part], stack, region)[part.id]


def accumulate_votes(parts: Iterable, stack: ChannelStack, region: Region,
                     sigma: float = 2.0,
                     maps: Optional[Dict[int, np.ndarray]] = None) -> VoteMap:
    """Sum the parts' activation maps, smooth, and take the peak.

    A part abstains (contributes 0) where its patch is off-frame.
    ``maps`` may hold activations computed earlier for the same region.
    """
    parts = list(parts)
    if maps is None:
        maps = activation_maps(parts, stack, region)
    raw = np.zeros(region.shape)
    for p in parts:
        a = maps[p.id]
        raw += np.where(np.isfinite(a), a, 0.0)
    if parts and sigma > 0:
        values = gaussian_filter(raw, sigma, truncate=3.0, mode="nearest")
    else:
        values = raw.copy()
    r, c = first_argmax(values)
    return VoteMap(region, raw, values, (region.x0 + int(c), region.y0 + int(r)),
                   float(values[r, c]))


def part_peak(amap: np.ndarray, region: Region) -> Optional[Tuple[int, int]]:
    """Frame location (x, y) of a part's strongest vote, None if it has none."""
    if not np.isfinite(amap).any():
        return None
    r, c = first_argmax(amap)
    return region.x0 + int(c), region.y0 + int(r)


def agreement_set(parts: Iterable, stack: ChannelStack, region: Region, chosen,
                  radius: int = 5,
                  maps: Optional[Dict[int, np.ndarray]] = None) -> Dict[int, bool]:
    """Whether each part's own peak lies within ``radius`` (Chebyshev) of ``chosen``."""
    parts = list(parts)
    if maps is None:
        maps = activation_maps(parts, stack, region)
    flags = {}
    for p in parts:
        peak = part_peak(maps[p.id], region)
        flags[p.id] = peak is not None and max(abs(peak[0] - chosen[0]),
                                               abs(peak[1] - chosen[1])) <= radius
    return flags
