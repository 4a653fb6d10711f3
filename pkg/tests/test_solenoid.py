import numpy as np
import pytest
from hypothesis import given, strategies as st

from ilc import solenoid
from ilc.core import InsufficientWindow, translate
from ilc.solenoid import (ONE_POINT, TWO_POINT, LabelNotAllowed, build_supertile, expansivity_probe,
                          finite_set, gap_alpha, label_distance, nu2, parity_word,
                          period_doubling_word, solenoid_map, toeplitz_fill,
                          transition_count_brute, transition_count_formula, transition_sweep)


def test_small_supertiles():
    assert list(build_supertile(1, 7).labels) == [7, 0]
    assert list(build_supertile(2, "lim").labels) == ["lim", 0, 1, 0]


def test_p4_golden():
    assert list(build_supertile(4, 9).labels) == [9, 0, 1, 0, 2, 0, 1, 0, 3, 0, 1, 0, 2, 0, 1, 0]


def test_label_not_allowed():
    with pytest.raises(LabelNotAllowed):
        build_supertile(3, 1)
    with pytest.raises(LabelNotAllowed):
        build_supertile(2, "lim_even")


@pytest.mark.parametrize("k", range(1, 9))
def test_grammar_identity_and_tail(k):
    l = k + 3
    p = build_supertile(k, l).labels
    assert p == build_supertile(k - 1, l).labels + build_supertile(k - 1, k - 1).labels
    assert all(p[i] == nu2(i) for i in range(1, 2 ** k))
    w = toeplitz_fill(1, 2 ** k)
    assert list(w.patch.labels) == list(p[1:])


def test_transition_examples():
    big = "lim"
    assert transition_count_formula(1, 4, 1, big, ONE_POINT) == 4
    assert transition_count_formula(0, 4, 2, 7, ONE_POINT) == 2
    assert transition_count_formula(0, 4, 7, 7, ONE_POINT) == 1
    assert transition_count_brute(1, 4, 2, 9, ONE_POINT) == 2
    assert transition_count_brute(0, 2, 0, 5, ONE_POINT) == 2
    assert transition_count_brute(1, 4, 1, 9, ONE_POINT) == 4


def test_small_sweep_agrees():
    res = transition_sweep(max_N=7, max_label=9)
    assert res.mismatches == 0
    assert len(res.rows) > 500


def test_two_point_sweep_agrees():
    assert transition_sweep(max_N=6, max_label=8, spec=TWO_POINT).mismatches == 0


def test_toeplitz_examples():
    w = toeplitz_fill(1, 8)
    assert list(w.patch.labels) == [0, 1, 0, 2, 0, 1, 0]
    labs = toeplitz_fill(-64, 64).patch.labels
    for i, v in zip(range(-64, 64), labs):
        if i % 2:
            assert v == 0
        elif i:
            assert v == nu2(i)
    assert labs[64] == "lim"


@given(st.integers(0, 40), st.integers(0, 1000))
def test_nu2(n, odd):
    assert nu2((2 * odd + 1) << n) == n


def test_period_doubling_match():
    # the window [0, 2^n) is an n-supertile; slot 0 holds the even-class limit
    n = 10
    labs = toeplitz_fill(0, 2 ** n, center_label="lim_even", spec=TWO_POINT).patch.labels
    parity = "".join("X" if TWO_POINT.klass(v) == 0 else "Y" for v in labs)
    assert parity == period_doubling_word(n)
    assert parity_word(labs[1:]) == period_doubling_word(n)[1:]


def test_solenoid_map_examples():
    w = toeplitz_fill(-8, 8)
    assert solenoid_map(w, 5).coords == (0.0,) * 6
    # origin in the middle of tile 1, which is the right half of its 1-supertile [0, 2)
    p = solenoid_map(translate(w, -1.5), 3)
    assert p.coords[0] == 0.5 and p.coords[1] == 0.75
    assert p.compatible()


@given(st.floats(-100, 100), st.integers(0, 2 ** 20))
def test_solenoid_map_compatible(x, shift):
    w = translate(toeplitz_fill(-4, 4, shift=shift), -x)
    assert solenoid_map(w, 12).compatible(1e-9)


def test_solenoid_map_depth_limited():
    w = build_supertile(3, 5).to_window()
    with pytest.raises(InsufficientWindow):
        solenoid_map(w, 4)


def test_label_metric():
    assert label_distance("lim", "lim") == 0
    assert label_distance(3, 5) == pytest.approx(0.09375)
    d = [label_distance(m, "lim") for m in range(20)]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert label_distance("lim_even", "lim_odd", TWO_POINT) == 1
    assert label_distance(10, 12, TWO_POINT) < label_distance(10, 11, TWO_POINT)
    with pytest.raises(LabelNotAllowed):
        label_distance(3, "lim_even", ONE_POINT)


@pytest.mark.parametrize("spec", [ONE_POINT, TWO_POINT, finite_set(3)])
def test_label_metric_axioms(spec):
    labs = list(range(12)) + list(spec.limits)
    D = np.array([[spec(a, b) for b in labs] for a in labs])
    assert np.allclose(D, D.T) and np.allclose(np.diag(D), 0)
    assert (D <= 1).all()
    assert (D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 1e-12).all()


def test_expansivity():
    w = expansivity_probe(ONE_POINT, 0.1)
    assert w is not None and not w.trivial and w.N == 4
    assert expansivity_probe(TWO_POINT, 0.1) is None
    assert expansivity_probe(TWO_POINT, 1.0).trivial


def test_gap_alpha():
    assert gap_alpha({0}).value == 1
    assert gap_alpha(lambda n: n % 2 == 0).value == pytest.approx(4 / 3, abs=1e-12)
    assert gap_alpha(lambda n: True).value == pytest.approx(2, abs=1e-12)


def test_measure_weights_sum():
    for n in range(5):
        labels = list(range(n, 60))
        w = solenoid.measure_weights(n, labels)
        assert sum(2 ** n * x for x in w) == pytest.approx(1, abs=1e-12)
