"""The tracker automaton: strong (S), update (U), weak (W) and crisis (C) states.

S votes with reliable and gold parts around the previous center. A weak S
vote is repeated in the same frame with candidates included (W). A weak W
vote puts the tracker in crisis: from the next frame on it searches the
whole frame with reliable and gold parts, without touching the roster,
until a strong vote brings it back to S. Every ``T_update`` frames a strong
S frame is followed by an update phase (U) that reviews part reliability,
applies the size budget and proposes new candidate parts.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .boxes import Box
from .errors import EmptyNegativesError, InitializationError, UsageError
from .features import ChannelStack, build_channel_stack
from .params import ParameterSet
from .parts import PartRoster, PartState, enforce_budget, record_agreement, review_lifecycle
from .sampling import propose_parts
from .voting import Region, VoteMap, accumulate_votes, activation_maps, agreement_set

log = logging.getLogger(__name__)


class TrackerState(str, enum.Enum):
    S = "S"
    U = "U"
    W = "W"
    C = "C"


@dataclass(frozen=True)
class TraceRecord:
    """What happened in one frame. ``phases`` lists the states visited in
    order (e.g. ``"SW"``); ``state`` is the state the next frame starts in.
    ``votes`` holds, per vote taken, the phase, the states of the voting
    parts and the peak value."""

    frame: int
    phases: str
    state: TrackerState
    M_v: float
    t_v: float
    center: Tuple[int, int]
    counts: Dict[str, int]
    votes: Tuple[Tuple[str, Tuple[str, ...], float], ...] = ()
    roster_before: str = ""
    roster_after: str = ""


@dataclass
class TrackerContext:
    state: TrackerState
    bbox: Box
    frame_index: int
    roster: PartRoster
    params: ParameterSet
    frames_since_update: int = 0
    trace: List[TraceRecord] = field(default_factory=list)
    vision: object = None

    @property
    def center(self) -> Tuple[int, int]:
        return self.bbox.pixel_center


class PixelVision:
    """Default perception backend operating on real frames."""

    def observe(self, frame) -> ChannelStack:
        if isinstance(frame, ChannelStack):
            return frame
        return build_channel_stack(frame)

    def activations(self, stack, parts, region):
        return activation_maps(parts, stack, region)

    def vote(self, stack, parts, region, maps, sigma) -> VoteMap:
        return accumulate_votes(parts, stack, region, sigma, maps=maps)

    def agreement(self, stack, parts, region, maps, chosen, radius) -> Dict[int, bool]:
        return agreement_set(parts, stack, region, chosen, radius, maps=maps)

    def propose(self, stack, bbox, roster, params, frame, state):
        return propose_parts(stack, bbox, roster, params, frame=frame, state=state)


def vote_threshold(params: ParameterSet, n_voters: int) -> float:
    return params.t_v * n_voters


def transition(state: TrackerState, M_v: float, t_v: float,
               frames_since_update: int = 0, T_update: int = 10,
               ablation: str = "full") -> TrackerState:
    """Next state after a vote of strength ``M_v`` taken in ``state``.

    Staying strong needs ``M_v > t_v`` strictly. For S a strong vote
    returns U when an update is due. Ablations drop W (``"s"``) or C
    (``"sw"``); their weak votes fall back to S.
    """
    strong = M_v > t_v
    if state is TrackerState.U:
        return TrackerState.S
    if state is TrackerState.S:
        if strong:
            return TrackerState.U if frames_since_update >= T_update else TrackerState.S
        return TrackerState.S if ablation == "s" else TrackerState.W
    if state is TrackerState.W:
        if strong:
            return TrackerState.S
        return TrackerState.C if ablation == "full" else TrackerState.S
    return TrackerState.S if strong else TrackerState.C


def _kinds(parts) -> Tuple[str, ...]:
    return tuple(sorted({p.state.value for p in parts}))


def init_from_groundtruth(frame, gt_box, params: Optional[ParameterSet] = None,
                          vision=None) -> TrackerContext:
    """Learn the founding parts on the first frame; they start Reliable."""
    params = params or ParameterSet()
    vision = vision or PixelVision()
    box = Box(*gt_box)
    stack = vision.observe(frame)
    cx, cy = box.pixel_center
    if not (0 <= cx < stack.width and 0 <= cy < stack.height):
        raise InitializationError(f"ground-truth box {tuple(box)} is outside the frame")
    roster = PartRoster(n_max=params.n_max)
    try:
        parts = vision.propose(stack, box, roster, params, 1, PartState.RELIABLE)
    except EmptyNegativesError as exc:
        raise InitializationError(f"cannot mine negatives: {exc}") from exc
    if not parts:
        raise InitializationError("no discriminative part found in the first frame")
    enforce_budget(roster, params.n_max, frame=1)
    box = Box.around(box.pixel_center, int(box.w), int(box.h))
    ctx = TrackerContext(TrackerState.S, box, 1, roster, params, 1, vision=vision)
    ctx.trace.append(TraceRecord(1, "S", TrackerState.S, math.nan, math.nan, ctx.center,
                                 roster.counts(), (), "", roster.fingerprint()))
    return ctx


def _update_phase(ctx: TrackerContext, stack) -> None:
    p = ctx.params
    frame = ctx.frame_index
    review_lifecycle(ctx.roster, p.p_plus, p.p_minus, frame=frame, gold_streak=p.gold_streak)
    enforce_budget(ctx.roster, p.n_max, frame=frame)
    try:
        new = ctx.vision.propose(stack, ctx.bbox, ctx.roster, p, frame, PartState.CANDIDATE)
        log.debug("frame %d: %d new candidates", frame, len(new))
    except EmptyNegativesError as exc:
        log.warning("frame %d: update skipped (%s)", frame, exc)
    ctx.frames_since_update = 0


def step(ctx: TrackerContext, frame) -> Tuple[TrackerContext, Box]:
    """Advance the tracker by one frame and return the predicted box."""
    if ctx is None or not isinstance(ctx, TrackerContext) or ctx.vision is None:
        raise UsageError("tracker context is not initialized; call init_from_groundtruth")
    p = ctx.params
    vision = ctx.vision
    roster = ctx.roster
    stack = vision.observe(frame)
    ctx.frame_index += 1
    ctx.frames_since_update += 1
    before = roster.fingerprint()
    center = ctx.center
    voters = roster.voters
    t_v = vote_threshold(p, len(voters))
    votes = []

    if ctx.state is TrackerState.C:
        region = Region.whole(stack)
        maps = vision.activations(stack, voters, region)
        vm = vision.vote(stack, voters, region, maps, p.sigma_smooth)
        votes.append(("C", _kinds(voters), vm.peak_value))
        if voters:
            center = vm.peak
        phases = "C"
        ctx.state = transition(TrackerState.C, vm.peak_value, t_v, ablation=p.ablation)
        M_v = vm.peak_value
    else:
        region = Region.around(center, p.delta, stack)
        everyone = list(roster.parts)
        maps = vision.activations(stack, everyone, region)
        vm = vision.vote(stack, voters, region, maps, p.sigma_smooth)
        votes.append(("S", _kinds(voters), vm.peak_value))
        M_v = vm.peak_value
        nxt = transition(TrackerState.S, M_v, t_v, ctx.frames_since_update, p.T_update,
                         p.ablation)
        phases = "S"
        chosen = vm.peak if voters else center
        record = True
        if nxt is TrackerState.W:
            phases += "W"
            candidates = roster.with_state(PartState.CANDIDATE)
            wvoters = voters + candidates
            wm = vision.vote(stack, wvoters, region, maps, p.sigma_smooth)
            votes.append(("W", _kinds(wvoters), wm.peak_value))
            M_v = wm.peak_value
            nxt = transition(TrackerState.W, M_v, t_v, ablation=p.ablation)
            if M_v > t_v:
                chosen = wm.peak
                flags = vision.agreement(stack, candidates, region, maps, chosen, p.agree_radius)
                for part in candidates:
                    if flags[part.id]:
                        roster.set_state(part, PartState.RELIABLE, ctx.frame_index,
                                         "agreed in weak state")
                enforce_budget(roster, p.n_max, frame=ctx.frame_index)
            elif nxt is TrackerState.C:
                chosen = center
                record = False
            else:
                chosen = wm.peak if wvoters else center
        if record:
            flags = vision.agreement(stack, everyone, region, maps, chosen, p.agree_radius)
            for part in everyone:
                if part.state is not PartState.REMOVED:
                    record_agreement(part, flags[part.id])
        center = chosen
        ctx.bbox = Box.around(center, int(ctx.bbox.w), int(ctx.bbox.h))
        if nxt is TrackerState.U:
            phases += "U"
            _update_phase(ctx, stack)
            nxt = TrackerState.S
        ctx.state = nxt

    ctx.bbox = Box.around(center, int(ctx.bbox.w), int(ctx.bbox.h))
    ctx.trace.append(TraceRecord(ctx.frame_index, phases, ctx.state, float(M_v), float(t_v),
                                 center, roster.counts(), tuple(votes), before,
                                 roster.fingerprint()))
    return ctx, ctx.bbox


class Tracker:
    """Convenience wrapper: ``init`` on the first frame, then ``update``."""

    def __init__(self, params: Optional[ParameterSet] = None, vision=None):
        self.params = params or ParameterSet()
        self.vision = vision
        self.ctx: Optional[TrackerContext] = None

    def init(self, frame, box) -> Box:
        self.ctx = init_from_groundtruth(frame, box, self.params, self.vision)
        return self.ctx.bbox

    def update(self, frame) -> Box:
        if self.ctx is None:
            raise UsageError("call init() before update()")
        _, box = step(self.ctx, frame)
        return box

    @property
    def trace(self) -> List[TraceRecord]:
        return [] if self.ctx is None else self.ctx.trace
