"""A scripted perception backend and an independent trace checker.

The fake draws vote strengths, agreements and proposals from a seeded RNG,
so that the automaton can be driven through many random traces cheaply.
It also logs the parts it was asked to vote with, which the checker uses
as a second witness next to the trace the engine reports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stp.errors import EmptyNegativesError
from stp.features import PatchGeometry
from stp.parts import PartState, VOTING_STATES
from stp.voting import VoteMap

GEOMETRIES = (PatchGeometry.square(17), PatchGeometry.square(27), PatchGeometry(8, 8, 5, "full"))


@dataclass
class FakeFrame:
    width: int = 320
    height: int = 240


class FakeVision:
    def __init__(self, seed, p_strong=0.75, p_empty=0.1, dim=6):
        self.rng = np.random.default_rng(seed)
        self.p_strong = p_strong
        self.p_empty = p_empty
        self.dim = dim
        self.calls = []          # one list of vote calls per frame

    def observe(self, frame):
        self.calls.append([])
        return frame

    def activations(self, stack, parts, region):
        return {p.id: None for p in parts}

    def vote(self, stack, parts, region, maps, sigma):
        states = tuple(p.state for p in parts)
        self.calls[-1].append(states)
        n_rg = sum(s in VOTING_STATES for s in states)
        t_v = 0.3 * n_rg
        u = self.rng.random()
        if u < 0.05:
            value = t_v                      # boundary draws are weak
        elif u < self.p_strong:
            value = t_v + self.rng.uniform(0.01, 5.0)
        else:
            value = t_v - self.rng.uniform(0.0, 5.0)
        x = int(self.rng.integers(region.x0, region.x1))
        y = int(self.rng.integers(region.y0, region.y1))
        return VoteMap(region, None, None, (x, y), float(value))

    def agreement(self, stack, parts, region, maps, chosen, radius):
        return {p.id: bool(self.rng.random() < 0.6) for p in parts}

    def propose(self, stack, bbox, roster, params, frame, state):
        if state is PartState.CANDIDATE and self.rng.random() < self.p_empty:
            raise EmptyNegativesError("scripted")
        n = int(self.rng.integers(1 if state is PartState.RELIABLE else 0, 30))
        out = []
        for _ in range(n):
            g = GEOMETRIES[int(self.rng.integers(len(GEOMETRIES)))]
            # coarse kernels so that exact duplicates occur
            kernel = self.rng.integers(-1, 2, size=self.dim).astype(float)
            kernel[0] = 1.0
            offset = tuple(int(v) for v in self.rng.integers(-20, 21, 2))
            out.append(roster.new_part(kernel, offset, g, state=state, frame=frame))
        return out


def check_trace(ctx, vision=None, ablation="full"):
    """Return a list of human-readable violations (empty when the run is valid)."""
    bad = []
    trace = ctx.trace
    gold = set()
    for e in ctx.roster.events:
        if e.new is PartState.GOLD:
            gold.add(e.part_id)
        if e.new is PartState.REMOVED and e.part_id in gold:
            bad.append(f"gold part {e.part_id} removed at frame {e.frame}")

    for prev, rec in zip(trace, trace[1:]):
        f = rec.frame
        kinds = [v[0] for v in rec.votes]
        if "".join(kinds) != rec.phases.replace("U", ""):
            bad.append(f"frame {f}: phases {rec.phases} vs votes {kinds}")
        for phase, states, _ in rec.votes:
            if phase in "SC" and "candidate" in states:
                bad.append(f"frame {f}: candidate voted in {phase}")
        if rec.phases.startswith("C"):
            if prev.state.value != "C":
                bad.append(f"frame {f}: C search without entering crisis")
            if rec.roster_before != rec.roster_after:
                bad.append(f"frame {f}: roster changed in crisis")
        else:
            if prev.state.value == "C":
                bad.append(f"frame {f}: left crisis without a strong C vote")
            s_value = rec.votes[0][2]
            if "W" in rec.phases and not s_value <= rec.t_v:
                bad.append(f"frame {f}: W after a strong S vote")
            if ablation != "s" and s_value <= rec.t_v and "W" not in rec.phases:
                bad.append(f"frame {f}: weak S vote did not enter W")
            if "U" in rec.phases and (s_value <= rec.t_v or "W" in rec.phases):
                bad.append(f"frame {f}: update after a weak vote")
        if rec.state.value == "C":
            last_phase, _, last_value = rec.votes[-1]
            if last_phase not in "WC" or last_value > rec.t_v:
                bad.append(f"frame {f}: crisis not caused by a weak W/C vote")
            if ablation != "full":
                bad.append(f"frame {f}: crisis under ablation {ablation}")
        if rec.state.value not in "SC":
            bad.append(f"frame {f}: frame ended in state {rec.state.value}")

    if vision is not None:
        # the first vote of every stepped frame is S or C and must exclude candidates
        for n, calls in enumerate(vision.calls[1:], start=2):
            if calls and PartState.CANDIDATE in calls[0]:
                bad.append(f"frame {n}: backend saw a candidate in the first vote")
    return bad
