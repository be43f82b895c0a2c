"""Hard-negative mining and dense proposal of new parts inside the box."""
from __future__ import annotations

import logging
from typing import List, Optional, Sequence

import numpy as np

from .boxes import Box
from .errors import EmptyNegativesError, OutOfBoundsError
from .features import (ChannelStack, PatchDescriptor, PatchGeometry, center_blocks,
                       edge_density_map, extract_descriptor, valid_center_range)
from .params import ParameterSet
from .parts import Part, PartRoster, PartState
from .ridge_bank import response, train_bank

log = logging.getLogger(__name__)

_TINY = 1e-9


def _geometry(side) -> PatchGeometry:
    return side if isinstance(side, PatchGeometry) else PatchGeometry.square(int(side))


def mine_negatives(stack: ChannelStack, bbox, count: int, side) -> List[PatchDescriptor]:
    """Descriptors centered outside ``bbox`` in decreasing edge density.

    Centers closer than half the patch size (Chebyshev) to an already
    selected one are suppressed. Ties in density follow raster order.
    """
    geometry = _geometry(side)
    bbox = Box(*bbox)
    if count < 1:
        raise ValueError("count must be at least 1")
    sh, sw = geometry.span
    if sh > stack.height or sw > stack.width:
        raise EmptyNegativesError("patch larger than the frame")
    density = edge_density_map(stack, geometry)
    x0, x1, y0, y1 = valid_center_range(stack, geometry)
    valid = np.zeros(density.shape, dtype=bool)
    valid[y0:y1, x0:x1] = True
    bx0, by0 = max(int(bbox.x), 0), max(int(bbox.y), 0)
    bx1, by1 = max(int(bbox.x + bbox.w), 0), max(int(bbox.y + bbox.h), 0)
    valid[by0:by1, bx0:bx1] = False
    if not valid.any():
        raise EmptyNegativesError(f"no valid center outside {tuple(bbox)}")

    flat = np.flatnonzero(valid.ravel())
    order = flat[np.argsort(-density.ravel()[flat], kind="stable")]
    ry, rx = sh // 2, sw // 2
    suppressed = np.zeros(density.shape, dtype=bool)
    width = stack.width
    out: List[PatchDescriptor] = []
    for idx in order:
        cy, cx = divmod(int(idx), width)
        if suppressed[cy, cx]:
            continue
        out.append(extract_descriptor(stack, (cx, cy), geometry))
        if len(out) == count:
            break
        suppressed[max(cy - ry, 0):cy + ry + 1, max(cx - rx, 0):cx + rx + 1] = True
    if len(out) < count:
        log.warning("only %d of %d negatives available for %s patches",
                    len(out), count, geometry.label)
    return out


def part_geometries(bbox, params: ParameterSet) -> List[PatchGeometry]:
    """Small, medium and full-box geometries, in priority order."""
    bbox = Box(*bbox)
    return [PatchGeometry.square(params.small_side),
            PatchGeometry.square(params.medium_side),
            PatchGeometry.full_box(int(bbox.h), int(bbox.w), params.full_box_max)]


class _Coverage:
    """Pixels of the (frame-clipped) box that some selected patch covers."""

    def __init__(self, stack: ChannelStack, bbox: Box, stride: int):
        self.x0 = max(int(bbox.x), 0)
        self.y0 = max(int(bbox.y), 0)
        self.x1 = min(int(bbox.x + bbox.w), stack.width)
        self.y1 = min(int(bbox.y + bbox.h), stack.height)
        self.stride = stride
        self.mask = np.zeros((max(self.y1 - self.y0, 0), max(self.x1 - self.x0, 0)), dtype=bool)

    def grid(self):
        return [(gx, gy) for gy in range(self.y0, self.y1, self.stride)
                for gx in range(self.x0, self.x1, self.stride)]

    def cover(self, center, geometry: PatchGeometry, mask=None) -> None:
        mask = self.mask if mask is None else mask
        sh, sw = geometry.span
        x, y = geometry.top_left(center)
        mask[max(y - self.y0, 0):max(y + sh - self.y0, 0),
             max(x - self.x0, 0):max(x + sw - self.x0, 0)] = True

    def cell_covered(self, g, mask=None) -> bool:
        """A grid point counts as covered when its whole stride cell is."""
        mask = self.mask if mask is None else mask
        ox, oy = g[0] - self.x0, g[1] - self.y0
        return bool(mask[oy:oy + self.stride, ox:ox + self.stride].all())

    @property
    def complete(self) -> bool:
        return bool(self.mask.all())


def own_location_responses(stack: ChannelStack, parts: Sequence[Part], center,
                           normalize: bool = True) -> np.ndarray:
    """Response of each part on the patch at ``center + offset`` (NaN off-frame)."""
    out = np.full(len(parts), np.nan)
    for n, part in enumerate(parts):
        c = (center[0] + part.offset[0], center[1] + part.offset[1])
        try:
            d = extract_descriptor(stack, c, part.geometry)
        except OutOfBoundsError:
            continue
        if d.center != c:
            continue
        v = center_blocks(d.values) if normalize else d.values
        out[n] = response(part.kernel, v)
    return out


def discriminativeness(own: np.ndarray, neg_max: np.ndarray) -> np.ndarray:
    """Own response over the largest negative response (inf if no negative fires)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(neg_max > 0, own / np.where(neg_max > 0, neg_max, 1.0), np.inf)
    return np.where(own > _TINY, ratio, 0.0)


def _train_batch(stack, batch, geometry, negatives, params):
    """Train the batch positives against the first negatives; return
    (descriptor, calibrated kernel, ratio) per positive."""
    pos = [extract_descriptor(stack, g, geometry) for g in batch]
    n_neg = min(params.neg_ratio * len(pos), params.max_samples - len(pos), len(negatives))
    neg = negatives[:n_neg]
    D = np.stack([d.values for d in pos] + [d.values for d in neg])
    if params.normalize:
        D = center_blocks(D)
    lam = params.ridge_lambda(geometry.length)
    bank = train_bank(D, lam)
    P = len(pos)
    C = bank.columns[:, :P]
    own = bank.own_responses(D[:P])
    neg_max = (D[P:] @ C).max(axis=0) if n_neg else np.full(P, -np.inf)
    energy = np.linalg.norm(D[:P], axis=1) / np.sqrt(geometry.length)
    own = np.where(energy > _TINY, own, 0.0)
    ratio = discriminativeness(own, neg_max)
    safe_own = np.where(own > _TINY, own, 1.0)
    kernels = C / safe_own
    if params.normalize:
        kernels = center_blocks(kernels.T).T
    return pos, kernels, ratio


def propose_parts(stack: ChannelStack, bbox, roster: PartRoster, params: ParameterSet,
                  frame: int = 0, state: PartState = PartState.CANDIDATE,
                  geometries: Optional[List[PatchGeometry]] = None) -> List[Part]:
    """Cover the box with discriminative patches and add them to ``roster``.

    Regions where current reliable/gold parts still respond at least
    ``params.weak_response`` count as covered already. Every uncovered
    grid point tries the small patch, then the medium, then the full-box
    one; a patch is kept if its own response exceeds ``t_d`` times the
    strongest negative response.

    Raises :class:`EmptyNegativesError` if no negative can be mined.
    """
    bbox = Box(*bbox)
    center = bbox.pixel_center
    cov = _Coverage(stack, bbox, params.grid_stride)
    voters = roster.voters
    if voters:
        resp = own_location_responses(stack, voters, center, params.normalize)
        for part, r in zip(voters, resp):
            if r >= params.weak_response:
                cov.cover((center[0] + part.offset[0], center[1] + part.offset[1]), part.geometry)

    if cov.complete:
        return []
    geometries = part_geometries(bbox, params) if geometries is None else geometries
    grid = cov.grid()
    max_pos = max(1, params.max_samples // (1 + params.neg_ratio))
    accepted = []
    mined_any = False
    for geometry in geometries:
        if cov.complete:
            break
        sh, sw = geometry.span
        if sh > stack.height or sw > stack.width:
            continue
        try:
            negatives = mine_negatives(stack, bbox, params.neg_ratio * max_pos, geometry)
        except EmptyNegativesError:
            continue
        mined_any = True
        tried = set()
        while True:
            pending = [g for g in grid if g not in tried and not cov.cell_covered(g)]
            if not pending:
                break
            # greedy batch whose footprints do not claim each other's cells
            optimistic = cov.mask.copy()
            batch = []
            for g in pending:
                if cov.cell_covered(g, optimistic):
                    continue
                batch.append(g)
                cov.cover(g, geometry, optimistic)
                if len(batch) == max_pos:
                    break
            pos, kernels, ratio = _train_batch(stack, batch, geometry, negatives, params)
            for j, g in enumerate(batch):
                tried.add(g)
                if cov.cell_covered(g) or not ratio[j] > params.t_d:
                    continue
                d = pos[j]
                accepted.append((d, kernels[:, j], geometry))
                cov.cover(d.center, geometry)
    if not mined_any:
        raise EmptyNegativesError("no negatives available for any patch size")

    new = []
    for d, kernel, geometry in accepted:
        offset = (d.center[0] - center[0], d.center[1] - center[1])
        new.append(roster.new_part(kernel, offset, geometry, state=state, frame=frame))
    return new
