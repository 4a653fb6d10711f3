import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ilc import dpv, subst1d
from ilc.core import (Box, DisconnectedError, Label, OverlapError, Tile, TilingWindow, covers,
                      make_patch, translate, transversal_sample, validate_patch, van_hove_ratio)
from ilc.metrics import patch_distance


def seg(a, b, lab=None):
    lab = b - a if lab is None else lab
    return Tile(Label("subst1d", lab), Box((a,), (b,)), (a,))


def test_translate_identity_and_inverse():
    t = seg(0.0, 2.0)
    assert translate(t, 0.0) == t
    assert translate(translate(t, 1.7), -1.7) == t


def test_translate_example_tile():
    t = translate(seg(0.0, 2.0), 1.0)
    assert t.support == Box((1.0,), (3.0,))
    assert t.label.value == 2.0
    assert t.control == (1.0,)


def test_validate_patch_cases():
    p = validate_patch([seg(1, 2), seg(0, 1)])
    assert [t.control for t in p] == [(0.0,), (1.0,)]
    with pytest.raises(DisconnectedError):
        validate_patch([seg(0, 1), seg(2, 3)])
    with pytest.raises(OverlapError):
        validate_patch([seg(0, 1), seg(0.5, 1.5)])


def test_validate_patch_2d_corner_touch_is_connected():
    a = Tile(Label("dpv", "A"), Box((0, 0), (1, 1)), (0, 0))
    b = Tile(Label("dpv", "B"), Box((1, 0), (2, 1)), (1, 0))
    c = Tile(Label("dpv", "B"), Box((3, 0), (4, 1)), (3, 0))
    assert len(validate_patch([a, b])) == 2
    with pytest.raises(DisconnectedError):
        validate_patch([a, c])


def test_control_point_must_be_in_support():
    with pytest.raises(ValueError):
        Tile(Label("subst1d", 2.0), Box((0,), (2,)), (3.0,))


def test_window_must_be_covered():
    p = make_patch([seg(0, 1), seg(1, 2)])
    TilingWindow(p, Box((0.5,), (1.5,)))
    assert not covers(p, Box((0,), (3,)))
    with pytest.raises(ValueError):
        TilingWindow(p, Box((0,), (3,)))


def test_translate_window_records_offset():
    p = make_patch([seg(0, 1), seg(1, 2)])
    w = translate(TilingWindow(p, Box((0,), (2,))), -0.5)
    assert w.provenance["anchor_offset"] == (-0.5,)
    assert w.window == Box((-0.5,), (1.5,))


def test_van_hove_examples():
    assert van_hove_ratio(Box((0, 0), (1, 1)), 0.0) == 0.0
    assert van_hove_ratio(Box((0,), (10,)), 1.0) == pytest.approx(0.4)


def test_van_hove_square_by_hand():
    # square of side 4, r = 1: outer frame 4*4 + pi, inner frame 16 - 4
    v = van_hove_ratio(Box((0, 0), (4, 4)), 1.0)
    assert v == pytest.approx((16 + math.pi + 12) / 16)


def test_van_hove_decreases_on_dpv_supertiles():
    vals = []
    for n in range(1, 8):
        vals.append(van_hove_ratio(dpv.supertile("A", n).bounding_box(), 1.0))
    assert all(b < a for a, b in zip(vals, vals[1:]))


@given(st.floats(0.5, 50), st.floats(0.5, 50), st.floats(0, 3))
def test_van_hove_nonincreasing_in_side(w, extra, r):
    small = van_hove_ratio(Box((0, 0), (w, w)), r)
    big = van_hove_ratio(Box((0, 0), (w + extra, w + extra)), r)
    assert big <= small + 1e-12


@settings(max_examples=50)
@given(st.lists(st.floats(1, 3), min_size=1, max_size=12), st.floats(-100, 100))
def test_validity_translation_invariant(lengths, x):
    p = subst1d.lengths_to_patch(lengths)
    q = validate_patch(translate(p, x).tiles)
    assert np.allclose(q.controls, p.controls + x)


def test_transversal_sample_subst1d():
    ws = transversal_sample("subst1d", 4, seed=3, level=8)
    for w in ws:
        assert any(t.control == (0.0,) for t in w.patch)
    again = transversal_sample("subst1d", 4, seed=3, level=8)
    assert [w.patch for w in ws] == [w.patch for w in again]


def test_transversal_sample_seeds_differ():
    a = transversal_sample("subst1d", 1, seed=1, level=8)[0]
    b = transversal_sample("subst1d", 1, seed=2, level=8)[0]
    box = Box((-3.0,), (3.0,))

    def crop(w):
        return make_patch([t for t in w.patch if t.support.hi[0] > box.lo[0] and t.support.lo[0] < box.hi[0]])
    assert patch_distance(crop(a), crop(b)) > 0


@pytest.mark.parametrize("system", ["dpv", "solenoid"])
def test_transversal_sample_other_systems(system):
    for w in transversal_sample(system, 3, seed=0):
        assert any(all(abs(c) < 1e-12 for c in t.control) for t in w.patch)


def test_unknown_system():
    with pytest.raises(ValueError):
        transversal_sample("penrose", 1, seed=0)
