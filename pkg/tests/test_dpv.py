import math
from fractions import Fraction

import numpy as np
import pytest

from ilc import dpv
from ilc.core import Box, DegenerateInput, OverlapError
from ilc.dpv import (DIRECT_PRODUCT, NATURAL, DPVParams, build_stepped_surface, dpv_substitute,
                     find_fault_lines, perron_data, project_surface, same_tiles, single_tile,
                     spectrum_constraints, supertile, supertile_frequencies, supertile_volumes,
                     transition_matrix)

M = np.array([[2, 2], [6, 0]])
RATIONAL = DPVParams(1.5, 1.0, 1.0, rational=(3, 2))


def test_substitute_single_tiles():
    a = dpv_substitute(single_tile("A"))
    assert list(a.counts()) == [2, 6]
    b = dpv_substitute(single_tile("B"))
    assert list(b.counts()) == [2, 0]
    a2 = dpv_substitute(a)
    assert len(a2) == 28 and list(a2.counts()) == [16, 12]


def test_substitute_layout_rows():
    # bottom row B B B A, top row A B B B
    r = dpv_substitute(single_tile("A"))
    rows = []
    for y in (0.0, 1.0):
        sel = np.isclose(r.y, y)
        rows.append("".join(r.names[t] for t in r.types[sel][np.argsort(r.x[sel])]))
    assert rows == ["BBBA", "ABBB"]


def test_substitute_rejects_wrong_widths():
    with pytest.raises(OverlapError):
        dpv_substitute(single_tile("A", DPVParams(2.0, 1.0, 1.0)), NATURAL)


def test_transition_matrix():
    assert (transition_matrix() == M).all()
    assert (np.linalg.matrix_power(transition_matrix(), 2) == [[16, 4], [12, 12]]).all()


@pytest.mark.parametrize("n", range(0, 7))
def test_counts_are_matrix_columns(n):
    Mn = np.linalg.matrix_power(M, n)
    assert list(supertile("A", n).counts()) == list(Mn[:, 0])
    assert list(supertile("B", n).counts()) == list(Mn[:, 1])


def test_perron():
    lam, v = perron_data()
    assert lam == pytest.approx(4.605551275, abs=1e-9)
    assert abs(lam ** 2 - 2 * lam - 12) < 1e-12
    assert np.abs(M @ v - lam * v).max() <= 1e-12
    assert np.allclose(v, [lam, 6])


def test_frequencies_normalised():
    lam, _ = perron_data()
    for n in range(0, 9):
        ra, rb = supertile_frequencies(n)
        va, vb = supertile_volumes(n)
        assert ra * va + rb * vb == pytest.approx(1.0, abs=1e-12)
    a = NATURAL.a
    ra, rb = supertile_frequencies(0)
    assert ra == pytest.approx(lam / (lam * a + 6))


def test_normaliser_scales_like_lambda():
    lam, _ = perron_data()
    # volumes grow like lambda^n, so rho_n = v / K shrinks like lambda^-n
    ks = [dpv.normaliser(n) / lam ** n for n in range(9)]
    assert np.ptp(ks) / ks[0] < 1e-9


def test_stepped_surface_base_case():
    s = build_stepped_surface("A", 0)
    assert len(s) == 1 and (s.corners == 0).all()
    r = project_surface(s)
    assert len(r) == 1 and r.w[0] == pytest.approx(NATURAL.a) and r.x[0] == 0


@pytest.mark.parametrize("kind", ["A", "B"])
@pytest.mark.parametrize("n", range(1, 5))
def test_projection_matches_substitution(kind, n):
    s = build_stepped_surface(kind, n)
    Mn = np.linalg.matrix_power(M, n)
    assert list(s.counts()) == list(Mn[:, "AB".index(kind)])
    assert same_tiles(project_surface(s), supertile(kind, n), 1e-9)


def test_projection_covers_bounding_box():
    r = project_surface(build_stepped_surface("A", 4))
    bb = r.bounding_box()
    assert float(np.sum(r.w * r.h)) == pytest.approx(bb.volume)


def test_surface_has_holes_at_level_three():
    holes = dpv.surface_holes(build_stepped_surface("A", 3))
    assert holes and all(h.area > 0 for h in holes)


def test_horizontal_edges_on_lattice():
    r = supertile("A", 6)
    k = r.y / NATURAL.c
    assert np.allclose(k, np.round(k))


def test_direct_product_offsets_zero():
    r = supertile("A", 4, NATURAL, DIRECT_PRODUCT)
    rep = find_fault_lines(r)
    offs = rep.all_offsets()
    assert len(offs) and np.allclose(offs, 0)
    assert rep.min_positive is None


def test_rational_offsets_half_integers():
    for n in range(1, 7):
        offs = find_fault_lines(supertile("A", n, RATIONAL)).all_offsets()
        assert np.allclose(2 * offs, np.round(2 * offs), atol=1e-9)


def distinct(offs):
    return set(np.round(offs, 7))


def test_offset_sets_finite_vs_growing():
    rat = [distinct(find_fault_lines(supertile("A", n, RATIONAL)).all_offsets()) for n in range(2, 7)]
    nat = [distinct(find_fault_lines(supertile("A", n)).all_offsets()) for n in range(2, 7)]
    assert len(set().union(*rat)) <= 4
    sizes = [len(s) for s in nat]
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))
    assert sizes[-1] > sizes[0] + 4


def test_natural_min_offset_nonincreasing_and_drops():
    mins = dpv.fault_offsets_by_level(range(1, 7))
    assert all(b <= a + 1e-12 for a, b in zip(mins, mins[1:]))
    assert mins[-1] < mins[0]


def test_spectrum_examples():
    assert spectrum_constraints([0.5, 1.0]).text == "α·x ∈ 2Z"
    assert spectrum_constraints([1.0, math.sqrt(2)]).text == "α·x = 0"
    assert spectrum_constraints([1.0, 2.0, 3.0]).text == "α·x ∈ Z"
    assert spectrum_constraints([1.0], by_level=[0.3, 0.1, 0.03]).text == "α·x = 0"
    with pytest.raises(DegenerateInput):
        spectrum_constraints([0.0, 0.0])


def test_spectrum_of_natural_widths():
    offs = find_fault_lines(supertile("A", 5)).all_offsets()
    assert spectrum_constraints(offs).kind == "zero"


def test_spectrum_rational_widths():
    offs = find_fault_lines(supertile("A", 5, RATIONAL)).all_offsets()
    c = spectrum_constraints(offs)
    assert c.kind == "lattice" and c.modulus == Fraction(2)


def test_rational_flag_checked():
    with pytest.raises(ValueError):
        DPVParams(1.5, 1.0, 1.0, rational=(2, 1))


def test_region_matches_full_supertile():
    full = supertile("A", 7)
    box = Box((30.0, 20.0), (80.0, 60.0))
    part = dpv.supertile_region("A", 7, box)
    sel = (full.x < box.hi[0]) & (full.x + full.w > box.lo[0]) & (full.y < box.hi[1]) & (full.y + full.h > box.lo[1])
    crop = dpv.RectPatch(full.types[sel], full.x[sel], full.y[sel], full.w[sel], full.h[sel])
    assert same_tiles(part, crop, 1e-9)


def test_transversal_has_tile_at_origin():
    w = dpv.sample_transversal(np.random.default_rng(5), level=4)
    assert any(np.allclose(t.control, 0) for t in w.patch)
