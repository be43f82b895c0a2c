"""Part roster: lifecycle states, reliability counters and the size budget."""
from __future__ import annotations

import enum
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .features import PatchGeometry


class PartState(str, enum.Enum):
    CANDIDATE = "candidate"
    RELIABLE = "reliable"
    GOLD = "gold"
    REMOVED = "removed"


VOTING_STATES = (PartState.RELIABLE, PartState.GOLD)


@dataclass(eq=False)
class Part:
    """One tracking part.

    ``kernel`` is the calibrated classifier (response 1 on the patch it was
    trained on). ``offset`` is the patch center minus the object center.
    """

    id: int
    kernel: np.ndarray
    offset: Tuple[int, int]
    geometry: PatchGeometry
    state: PartState = PartState.CANDIDATE
    agree_count: int = 0
    seen_count: int = 0
    birth_frame: int = 0
    reliable_streak: int = 0

    @property
    def size_class(self) -> str:
        return self.geometry.label

    @property
    def reliability(self) -> Optional[float]:
        if self.seen_count == 0:
            return None
        return self.agree_count / self.seen_count

    @property
    def votes(self) -> bool:
        return self.state in VOTING_STATES

    def summary(self) -> dict:
        return {
            "id": self.id,
            "state": self.state.value,
            "offset": list(self.offset),
            "size": self.size_class,
            "f": self.reliability,
            "agree": self.agree_count,
            "seen": self.seen_count,
            "birth": self.birth_frame,
        }


@dataclass(frozen=True)
class RosterEvent:
    frame: int
    part_id: int
    old: Optional[PartState]
    new: PartState
    reason: str = ""


@dataclass
class PartRoster:
    parts: List[Part] = field(default_factory=list)
    n_max: int = 200
    events: List[RosterEvent] = field(default_factory=list)
    next_id: int = 0

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def new_part(self, kernel, offset, geometry, state=PartState.CANDIDATE, frame=0) -> Part:
        part = Part(self.next_id, kernel, tuple(int(v) for v in offset), geometry,
                    state=state, birth_frame=frame)
        self.next_id += 1
        self.parts.append(part)
        self.events.append(RosterEvent(frame, part.id, None, state, "born"))
        return part

    def set_state(self, part: Part, state: PartState, frame: int, reason: str = "") -> None:
        self.events.append(RosterEvent(frame, part.id, part.state, state, reason))
        part.state = state
        if state is PartState.REMOVED:
            self.parts.remove(part)

    def with_state(self, *states: PartState) -> List[Part]:
        return [p for p in self.parts if p.state in states]

    @property
    def voters(self) -> List[Part]:
        return self.with_state(*VOTING_STATES)

    def counts(self) -> Dict[str, int]:
        out = {s.value: 0 for s in (PartState.CANDIDATE, PartState.RELIABLE, PartState.GOLD)}
        for p in self.parts:
            out[p.state.value] += 1
        return out

    def fingerprint(self) -> str:
        """Digest of every part's identity, state and counters."""
        h = hashlib.sha1()
        for p in self.parts:
            h.update(f"{p.id}:{p.state.value}:{p.agree_count}:{p.seen_count}:"
                     f"{p.reliable_streak};".encode())
        return h.hexdigest()

    def dump(self) -> str:
        """JSON snapshot for debugging: id, state, offset, size, f_i."""
        return json.dumps([p.summary() for p in self.parts], indent=1)


def record_agreement(part: Part, agreed: bool) -> Part:
    part.seen_count += 1
    if agreed:
        part.agree_count += 1
    return part


@dataclass
class ReviewResult:
    promoted: List[Part] = field(default_factory=list)
    demoted: List[Part] = field(default_factory=list)
    removed: List[Part] = field(default_factory=list)


def review_lifecycle(roster: PartRoster, p_plus: float = 0.2, p_minus: float = 0.1,
                     frame: int = 0, gold_streak: int = 2) -> ReviewResult:
    """Promote parts with ``f > p_plus``, drop non-gold parts with ``f <= p_minus``.

    A Reliable part becomes Gold once it has passed ``gold_streak``
    consecutive reviews above ``p_plus``. Counters restart after the
    review. Parts never evaluated since the last review are left alone.
    """
    result = ReviewResult()
    for part in list(roster.parts):
        f = part.reliability
        part.agree_count = part.seen_count = 0
        if f is None:
            continue
        if part.state is PartState.GOLD:
            continue
        if f > p_plus:
            if part.state is PartState.CANDIDATE:
                roster.set_state(part, PartState.RELIABLE, frame, f"review f={f:.3f}")
                part.reliable_streak = 0
                result.promoted.append(part)
            else:
                part.reliable_streak += 1
                if part.reliable_streak >= gold_streak:
                    roster.set_state(part, PartState.GOLD, frame, f"review f={f:.3f}")
                    result.promoted.append(part)
        elif f <= p_minus:
            if part.state is PartState.RELIABLE:
                result.demoted.append(part)
            else:
                result.removed.append(part)
            roster.set_state(part, PartState.REMOVED, frame, f"review f={f:.3f}")
        else:
            part.reliable_streak = 0
    return result


def _unit_rows(parts: List[Part]) -> np.ndarray:
    K = np.stack([p.kernel for p in parts]).astype(np.float64)
    norms = np.linalg.norm(K, axis=1, keepdims=True)
    return np.divide(K, norms, out=np.zeros_like(K), where=norms > 0)


def enforce_budget(roster: PartRoster, n_max: Optional[int] = None, frame: int = 0) -> PartRoster:
    """Cap Reliable+Gold parts per size class at ``n_max``.

    Over the cap, the Reliable part most similar (cosine of classifiers) to
    an older member of its class is removed, newest first on ties, until
    the cap holds. A Reliable part with no older survivor is scored
    against the younger ones. Gold parts are never removed; if they alone exceed the
    cap a warning is emitted and the cap is relaxed to their count.
    """
    cap = roster.n_max if n_max is None else n_max
    classes: Dict[str, List[Part]] = {}
    for p in roster.voters:
        classes.setdefault(p.size_class, []).append(p)
    for label, members in classes.items():
        if len(members) <= cap:
            continue
        members.sort(key=lambda p: (p.birth_frame, p.id))
        U = _unit_rows(members)
        sim = U @ U.T
        alive = np.ones(len(members), dtype=bool)
        older = np.tril(np.ones_like(sim, dtype=bool), k=-1)
        while alive.sum() > cap:
            best, best_score = None, -np.inf
            for j in range(len(members) - 1, -1, -1):
                if not alive[j] or members[j].state is not PartState.RELIABLE:
                    continue
                mask = older[j] & alive
                if not mask.any():
                    # oldest survivor: compare with the younger ones instead
                    mask = alive.copy()
                    mask[j] = False
                    if not mask.any():
                        continue
                score = sim[j, mask].max()
                if score > best_score:
                    best, best_score = j, score
            if best is None:
                n_gold = sum(1 for p in members if p.state is PartState.GOLD)
                warnings.warn(f"size class {label}: {n_gold} gold parts exceed cap {cap}; "
                              f"cap relaxed", RuntimeWarning, stacklevel=2)
                break
            alive[best] = False
            roster.set_state(members[best], PartState.REMOVED, frame,
                             f"budget sim={best_score:.3f}")
    return roster
