import collections
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import paste, textured_frame
from fakes import FakeFrame, FakeVision, check_trace
from stp.boxes import Box
from stp.engine import (Tracker, TrackerState, init_from_groundtruth, step, transition,
                        vote_threshold)
from stp.errors import InitializationError, UsageError
from stp.harness.evaluation import evaluate_run, run_tracker
from stp.harness.synth import SynthConfig, synth_sequence
from stp.params import ParameterSet
from stp.parts import PartState

S, U, W, C = TrackerState.S, TrackerState.U, TrackerState.W, TrackerState.C


@pytest.mark.parametrize("state,mv,expected", [
    (S, 3.0, W),        # boundary is weak
    (S, 3.1, S),
    (S, 2.0, W),
    (W, 3.1, S),
    (W, 3.0, C),
    (C, 3.1, S),
    (C, 1.0, C),
    (U, 0.0, S),
])
def test_transition_table(state, mv, expected):
    assert transition(state, mv, 3.0) is expected


def test_transition_update_and_ablations():
    assert transition(S, 5, 1, frames_since_update=10, T_update=10) is U
    assert transition(S, 5, 1, frames_since_update=9, T_update=10) is S
    assert transition(S, 0, 1, ablation="s") is S
    assert transition(W, 0, 1, ablation="sw") is S
    assert transition(W, 0, 1, ablation="full") is C


def test_vote_threshold_scales_with_voters():
    assert vote_threshold(ParameterSet(), 10) == pytest.approx(3.0)


@pytest.fixture(scope="module")
def static_run():
    seq = synth_sequence(SynthConfig(seed=5, length=30, frame_size=(150, 190),
                                     object_size=(48, 48)))
    return seq, run_tracker(seq)


def test_update_every_ten_frames(static_run):
    _, run = static_run
    assert [r.frame for r in run.trace if "U" in r.phases] == [10, 20, 30]
    assert all(r.phases in ("S", "SU") for r in run.trace)


def test_static_object_is_tracked_exactly(static_run):
    seq, run = static_run
    assert all(b == seq.boxes[0] for b in run.predictions)
    assert {(b.w, b.h) for b in run.predictions} == {(48, 48)}


def test_run_is_deterministic(static_run):
    seq, run = static_run
    again = run_tracker(seq)
    assert again.predictions == run.predictions
    assert [(r.phases, r.M_v, r.roster_after) for r in again.trace] == \
        [(r.phases, r.M_v, r.roster_after) for r in run.trace]


def test_repeated_frame_keeps_the_center():
    seq = synth_sequence(SynthConfig(seed=6, length=1, frame_size=(150, 190),
                                     object_size=(40, 40)))
    tr = Tracker()
    tr.init(seq.frame(0), seq.boxes[0])
    first = tr.update(seq.frame(0))
    assert tr.update(seq.frame(0)) == first == seq.boxes[0]


def test_occlusion_enters_crisis_and_recovers():
    cfg = SynthConfig(seed=7, length=50, frame_size=(150, 200), object_size=(44, 44),
                      motion="random_walk", max_step=2, occlusions=[(20, 29)])
    seq = synth_sequence(cfg)
    run = run_tracker(seq)
    phases = {r.frame: r.phases for r in run.trace}
    hidden = range(20, 30)
    first_w = min(f for f in hidden if "W" in phases[f])
    first_c = min(f for f in hidden if phases[f].startswith("C"))
    assert first_w < first_c
    back = min(f for f in range(30, 51) if run.trace[f - 1].state is S)
    assert back - 30 <= 3
    assert evaluate_run(seq, run).at(20) >= 0.9


def test_crisis_leaves_roster_untouched():
    cfg = SynthConfig(seed=8, length=30, frame_size=(150, 200), object_size=(44, 44),
                      occlusions=[(12, 24)])
    run = run_tracker(synth_sequence(cfg))
    crisis = [r for r in run.trace if r.phases.startswith("C")]
    assert crisis
    assert all(r.roster_before == r.roster_after for r in crisis)
    assert all("candidate" not in kinds for r in crisis for _, kinds, _ in r.votes)


def flat_core_object():
    bg = textured_frame(21, (240, 320), sigma=1.0)
    obj = textured_frame(22, (64, 64), sigma=3.0)
    obj[11:53, 11:53] = (150, 90, 60)
    return paste(bg, obj, 128, 88), (128, 88, 64, 64)


def test_init_learns_every_size_class():
    frame, box = flat_core_object()
    ctx = init_from_groundtruth(frame, box)
    sizes = collections.Counter(p.size_class for p in ctx.roster.parts)
    assert set(sizes) == {"17", "27", "full"}
    assert all(p.state is PartState.RELIABLE for p in ctx.roster.parts)
    assert ctx.roster.counts()["gold"] == 0
    assert ctx.trace[0].frame == 1 and math.isnan(ctx.trace[0].M_v)


def test_init_fails_on_uniform_scene():
    with pytest.raises(InitializationError):
        init_from_groundtruth(np.full((100, 120, 3), 77, np.uint8), (40, 30, 30, 30))


def test_init_fails_outside_frame():
    frame = textured_frame(1, (60, 80))
    with pytest.raises(InitializationError):
        init_from_groundtruth(frame, (200, 200, 20, 20))


def test_step_requires_initialization():
    with pytest.raises(UsageError):
        step(None, np.zeros((10, 10, 3)))
    with pytest.raises(UsageError):
        Tracker().update(np.zeros((10, 10, 3)))


@pytest.mark.parametrize("ablation", ["s", "sw", "full"])
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), p_strong=st.floats(0.2, 0.95))
def test_random_traces_are_valid(ablation, seed, p_strong):
    params = ParameterSet(ablation=ablation, n_max=12)
    vision = FakeVision(seed, p_strong=p_strong)
    ctx = init_from_groundtruth(FakeFrame(), (100, 80, 64, 64), params, vision)
    for _ in range(60):
        step(ctx, FakeFrame())
    assert check_trace(ctx, vision, ablation) == []


def test_checker_catches_a_forged_trace():
    vision = FakeVision(3)
    ctx = init_from_groundtruth(FakeFrame(), (100, 80, 64, 64), ParameterSet(), vision)
    for _ in range(30):
        step(ctx, FakeFrame())
    rec = ctx.trace[5]
    forged = rec.__class__(**{**rec.__dict__, "votes": (("S", ("candidate",), 0.0),) + rec.votes[1:]})
    ctx.trace[5] = forged
    assert check_trace(ctx)
