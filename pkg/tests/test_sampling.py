import numpy as np
import pytest

from conftest import paste, textured_frame
from stp.boxes import Box
from stp.errors import EmptyNegativesError
from stp.features import ChannelStack, PatchGeometry, build_channel_stack, edge_density_map
from stp.params import ParameterSet
from stp.parts import PartRoster, PartState
from stp.sampling import (_Coverage, _train_batch, discriminativeness, mine_negatives,
                          own_location_responses, propose_parts)


def test_textureless_exterior_uses_raster_order():
    stack = ChannelStack(np.zeros((7, 30, 30)))
    negs = mine_negatives(stack, (10, 10, 10, 10), 3, 5)
    # first valid center is (2, 2); suppression radius 2 pushes the next ones right
    assert [d.center for d in negs] == [(2, 2), (5, 2), (8, 2)]
    assert not any(d.values.any() for d in negs)


def test_first_negative_sits_on_textured_blob():
    frame = np.full((60, 80, 3), 0.5)
    rng = np.random.default_rng(0)
    frame[40:52, 60:72] = rng.random((12, 12, 3))
    stack = build_channel_stack(frame)
    negs = mine_negatives(stack, (5, 5, 20, 20), 4, 9)
    dens = edge_density_map(stack, 9)
    dens[5:25, 5:25] = -1
    dens[:4, :] = dens[-4:, :] = dens[:, :4] = dens[:, -4:] = -1
    best = np.unravel_index(np.argmax(dens), dens.shape)
    assert negs[0].center == (best[1], best[0])
    assert 40 <= negs[0].center[1] < 52 and 60 <= negs[0].center[0] < 72


def test_negatives_are_outside_and_suppressed(scene):
    negs = mine_negatives(scene["stack"], scene["box"], 50, 17)
    box = Box(*scene["box"])
    centers = [d.center for d in negs]
    assert not any(box.contains(*c) for c in centers)
    for a in range(len(centers)):
        for b in range(a):
            assert max(abs(centers[a][0] - centers[b][0]), abs(centers[a][1] - centers[b][1])) > 8


def test_full_frame_box_has_no_negatives(scene):
    with pytest.raises(EmptyNegativesError):
        mine_negatives(scene["stack"], (0, 0, 160, 120), 5, 17)


def test_mining_warns_when_short(scene, caplog):
    negs = mine_negatives(scene["stack"], scene["box"], 10_000, 17)
    assert 0 < len(negs) < 10_000
    assert "negatives available" in caplog.text


def test_discriminativeness_edge_cases():
    r = discriminativeness(np.array([1.0, 1.0, 0.0, 1.0]), np.array([0.5, -0.2, 0.5, 2.0]))
    assert r[0] == 2.0 and r[1] == np.inf and r[2] == 0.0 and r[3] == 0.5


def test_uniform_object_yields_no_parts():
    params = ParameterSet()
    frame = textured_frame(3, (140, 180), sigma=1.0)
    # uniform patch reaching beyond the box by more than the full-box half size
    frame[10:130, 40:140] = (90, 140, 60)
    box = (70, 50, 40, 40)
    stack = build_channel_stack(frame)
    assert propose_parts(stack, box, PartRoster(), params) == []
    # every positive is constant per channel, so the centered descriptor vanishes
    negatives = mine_negatives(stack, box, 30, 17)
    _, _, ratio = _train_batch(stack, [(80, 60), (90, 70)], PatchGeometry.square(17),
                               negatives, params)
    assert np.all(ratio <= params.t_d)


def covered_mask(parts, box):
    box = Box(*box)
    cx, cy = box.pixel_center
    mask = np.zeros((int(box.h), int(box.w)), dtype=bool)
    for p in parts:
        sh, sw = p.geometry.span
        x, y = p.geometry.top_left((cx + p.offset[0], cy + p.offset[1]))
        x0, y0 = max(x - int(box.x), 0), max(y - int(box.y), 0)
        mask[y0:max(y + sh - int(box.y), 0), x0:max(x + sw - int(box.x), 0)] = True
    return mask


def test_textured_object_is_fully_covered():
    bg = textured_frame(4, (160, 200), sigma=1.0)
    obj = textured_frame(5, (64, 64), sigma=3.0)
    frame = paste(bg, obj, 70, 50)
    box = (70, 50, 64, 64)
    roster = PartRoster()
    parts = propose_parts(build_channel_stack(frame), box, roster, ParameterSet(),
                          state=PartState.RELIABLE)
    assert parts and all(p.state is PartState.RELIABLE for p in parts)
    assert covered_mask(parts, box).all()
    # one patch per grid point
    centers = [(p.offset, p.geometry.label) for p in parts]
    assert len({c for c, _ in centers}) == len(centers)


def test_proposals_are_deterministic(scene):
    params = ParameterSet()
    a = propose_parts(scene["stack"], scene["box"], PartRoster(), params)
    b = propose_parts(build_channel_stack(scene["frame"]), scene["box"], PartRoster(), params)
    assert [(p.offset, p.geometry) for p in a] == [(p.offset, p.geometry) for p in b]
    assert all(np.array_equal(p.kernel, q.kernel) for p, q in zip(a, b))


def test_accepted_parts_answer_one_on_their_patch(scene):
    parts = propose_parts(scene["stack"], scene["box"], PartRoster(), ParameterSet())
    own = own_location_responses(scene["stack"], parts, Box(*scene["box"]).pixel_center)
    assert np.allclose(own, 1.0, atol=1e-9)


def test_covered_box_proposes_nothing_more(scene):
    roster = PartRoster()
    propose_parts(scene["stack"], scene["box"], roster, ParameterSet(), state=PartState.RELIABLE)
    n = len(roster)
    assert propose_parts(scene["stack"], scene["box"], roster, ParameterSet()) == []
    assert len(roster) == n


def test_coverage_cells():
    stack = ChannelStack(np.zeros((7, 20, 20)))
    cov = _Coverage(stack, Box(4, 4, 6, 6), 2)
    assert len(cov.grid()) == 9
    cov.cover((5, 5), PatchGeometry.square(3))
    assert cov.cell_covered((4, 4)) and not cov.cell_covered((6, 6))
    assert not cov.complete
