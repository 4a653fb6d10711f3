import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ilc import subst1d
from ilc.core import Box, InsufficientWindow, Label, Tile, TilingWindow, make_patch, translate
from ilc.metrics import (DimensionMismatch, SystemMismatch, bottleneck_assignment, dL_distance,
                         hausdorff_distance, patch_distance, tile_distance, tile_distance_matrix,
                         tiling_distance, tilings_within)


def seg(a, ell):
    return Tile(Label("subst1d", ell), Box((a,), (a + ell,)), (a,))


def test_hausdorff_examples():
    b = Box((0,), (1,))
    assert hausdorff_distance(b, b) == 0
    assert hausdorff_distance(b, Box((0,), (3,))) == 2
    assert hausdorff_distance(b, Box((0.3,), (1.3,))) == pytest.approx(0.3)
    with pytest.raises(DimensionMismatch):
        hausdorff_distance(b, Box((0, 0), (1, 1)))


def test_hausdorff_2d_corner():
    # farthest point of the big box is the far corner at distance sqrt(2)
    d = hausdorff_distance(Box((0, 0), (1, 1)), Box((0, 0), (2, 2)))
    assert d == pytest.approx(np.sqrt(2))


def test_tile_distance_examples():
    t1, t3 = seg(0, 1.0), seg(0, 3.0)
    assert tile_distance(t1, t1) == 0
    assert tile_distance(t1, t3) == 2
    assert tile_distance(seg(0, 2.2), seg(0.01, 2.2)) == pytest.approx(0.01)
    with pytest.raises(SystemMismatch):
        tile_distance(t1, Tile(Label("dpv", "A"), Box((0,), (1,)), (0,)))


def test_label_only_difference():
    # same support, labels 1 and 3: label distance |1-3|/2 = 1
    a = Tile(Label("subst1d", 1.0), Box((0,), (2,)), (0,))
    b = Tile(Label("subst1d", 3.0), Box((0,), (2,)), (0,))
    assert tile_distance(a, b) == 1.0


def test_patch_distance_examples():
    p = subst1d.lengths_to_patch([2.0, 1.5, 2.5])
    assert patch_distance(p, p) == 0
    assert patch_distance(p, translate(p, 0.05)) == pytest.approx(0.05)
    assert patch_distance(subst1d.lengths_to_patch([2.0, 1.5]), p) == 1.0


def brute_bottleneck(cost):
    n = len(cost)
    return min(max(cost[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n)))


@settings(max_examples=200)
@given(st.integers(1, 5), st.integers(0, 10 ** 6))
def test_bottleneck_matches_brute_force(n, seed):
    cost = np.random.default_rng(seed).random((n, n))
    v, perm = bottleneck_assignment(cost)
    assert v == brute_bottleneck(cost)
    assert sorted(perm) == list(range(n))
    assert max(cost[i, perm[i]] for i in range(n)) == v


lengths = st.lists(st.floats(1, 3), min_size=1, max_size=4)


@st.composite
def same_size_patches(draw, k=3):
    n = draw(st.integers(1, 4))
    out = []
    for _ in range(k):
        ls = draw(st.lists(st.floats(1, 3), min_size=n, max_size=n))
        out.append(subst1d.lengths_to_patch(ls, draw(st.floats(-0.5, 0.5))))
    return out


@settings(max_examples=150)
@given(same_size_patches())
def test_patch_metric_axioms(ps):
    a, b, c = ps
    dab, dbc, dac = patch_distance(a, b), patch_distance(b, c), patch_distance(a, c)
    assert patch_distance(a, a) == 0
    assert dab == patch_distance(b, a)
    assert dac <= dab + dbc + 1e-12
    assert 0 <= dab <= 1


@settings(max_examples=100)
@given(same_size_patches(k=2))
def test_patch_distance_equals_exhaustive_bijections(ps):
    a, b = ps
    cost = tile_distance_matrix(a, b)
    assert patch_distance(a, b) == pytest.approx(min(brute_bottleneck(cost), 1.0))


def window(lengths, start=None):
    p = subst1d.lengths_to_patch(lengths, -sum(lengths) / 2 if start is None else start)
    return TilingWindow(p, p.bounding_box(), {})


def test_tiling_distance_self():
    w = subst1d.iterate(2.2, 12).to_window()
    c = w.window.lo[0] + 0.5 * w.window.widths[0]
    assert tiling_distance(w, w, tol=0.01, center=c) <= 0.01


def test_tiling_distance_agree_on_ball():
    rng = np.random.default_rng(0)
    base = list(rng.uniform(1, 3, 200))
    tail1 = list(rng.uniform(1, 3, 200))
    tail2 = list(rng.uniform(1, 3, 200))
    head1 = list(rng.uniform(1, 3, 200))
    head2 = list(rng.uniform(1, 3, 200))
    w1 = window(head1 + base + tail1, start=-sum(base) / 2 - sum(head1))
    w2 = window(head2 + base + tail2, start=-sum(base) / 2 - sum(head2))
    R = sum(base) / 2
    d = tiling_distance(w1, w2)
    assert d <= 1 / R + 1e-3


def test_tiling_distance_label_cap():
    lo = Box((-60.0,), (60.0,))
    t1 = [Tile(Label("dpv", "A"), Box((float(i),), (i + 1.0,)), (float(i),)) for i in range(-60, 60)]
    t2 = [Tile(Label("dpv", "B"), Box((float(i),), (i + 1.0,)), (float(i),)) for i in range(-60, 60)]
    w1 = TilingWindow(make_patch(t1), lo, {})
    w2 = TilingWindow(make_patch(t2), lo, {})
    assert tiling_distance(w1, w2) == 1.0


def test_tiling_distance_translation_continuity():
    w = subst1d.iterate(2.2, 12).to_window()
    c = w.window.lo[0] + 0.5 * w.window.widths[0]
    ds = [tiling_distance(w, translate(w, x), center=c) for x in (0.2, 0.05, 0.01)]
    assert ds[0] >= ds[1] >= ds[2]
    assert ds[2] <= 0.011


def test_insufficient_window():
    w = window([2.0, 2.0])
    with pytest.raises(InsufficientWindow):
        tilings_within(w, w, 0.1)


def test_dL_monotone_in_L():
    w1 = subst1d.iterate(2.2, 14).to_window()
    w2 = subst1d.iterate(2.2001, 14).to_window()
    c = w1.window.lo[0] + 0.5 * w1.window.widths[0]
    w1, w2 = translate(w1, -c), translate(w2, -c)
    r1 = dL_distance(w1, w2, 5.0, 1.0, tol=0.01)
    r2 = dL_distance(w1, w2, 10.0, 1.0, tol=0.01)
    assert r2.value >= r1.value - 0.01
    assert dL_distance(w1, w1, 5.0, 1.0, tol=0.01).value <= 0.01
