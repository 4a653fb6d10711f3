"""Tile, patch, tiling and window distances."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .core import Box, InsufficientWindow, Patch, Tile, TilingWindow

LabelMetric = Callable[[object, object], float]


class DimensionMismatch(ValueError):
    pass


class SystemMismatch(ValueError):
    pass


# -- label metrics -----------------------------------------------------------

def subst1d_label_distance(x, y) -> float:
    return min(abs(float(x) - float(y)) / 2.0, 1.0)


def discrete_label_distance(x, y) -> float:
    return 0.0 if x == y else 1.0


def default_label_metric(system: str) -> LabelMetric:
    if system == "subst1d":
        return subst1d_label_distance
    if system == "solenoid":
        from .solenoid import ONE_POINT

        return ONE_POINT
    return discrete_label_distance


def label_matrix(v1, v2, system: str, metric: Optional[LabelMetric] = None) -> np.ndarray:
    """Pairwise label distances, capped at 1."""
    if metric is None and system == "solenoid":
        from .solenoid import ONE_POINT

        metric = ONE_POINT
    if metric is not None and hasattr(metric, "matrix"):
        return np.minimum(metric.matrix(list(v1), list(v2)), 1.0)
    if metric is None and system == "subst1d":
        a = np.asarray(v1, dtype=float)[:, None]
        b = np.asarray(v2, dtype=float)[None, :]
        return np.minimum(np.abs(a - b) / 2.0, 1.0)
    if metric is None:
        a = np.asarray(v1, dtype=object)[:, None]
        b = np.asarray(v2, dtype=object)[None, :]
        return (a != b).astype(float)
    metric = metric or default_label_metric(system)
    out = np.empty((len(v1), len(v2)))
    for i, a in enumerate(v1):
        for j, b in enumerate(v2):
            out[i, j] = min(metric(a, b), 1.0)
    return out


# -- Hausdorff ----------------------------------------------------------------

def _directed(lo_a, hi_a, lo_b, hi_b):
    # The farthest point of box A from box B is a vertex of A; per-axis terms are independent.
    g_lo = np.maximum(np.maximum(lo_b - lo_a, 0.0), lo_a - hi_b)
    g_hi = np.maximum(np.maximum(lo_b - hi_a, 0.0), hi_a - hi_b)
    return np.sqrt((np.maximum(g_lo, g_hi) ** 2).sum(axis=-1))


def hausdorff_arrays(lo1, hi1, lo2, hi2) -> np.ndarray:
    """Hausdorff distance of boxes, broadcasting over leading axes."""
    return np.maximum(_directed(lo1, hi1, lo2, hi2), _directed(lo2, hi2, lo1, hi1))


def hausdorff_distance(s1: Box, s2: Box) -> float:
    if s1.dim != s2.dim:
        raise DimensionMismatch(f"{s1.dim}-box vs {s2.dim}-box")
    return float(hausdorff_arrays(np.array(s1.lo), np.array(s1.hi), np.array(s2.lo), np.array(s2.hi)))


def tile_distance(t1: Tile, t2: Tile, label_metric: Optional[LabelMetric] = None) -> float:
    if t1.label.system != t2.label.system:
        raise SystemMismatch(f"{t1.label.system} vs {t2.label.system}")
    metric = label_metric or default_label_metric(t1.label.system)
    return max(hausdorff_distance(t1.support, t2.support), min(metric(t1.label.value, t2.label.value), 1.0))


def tile_distance_matrix(p1: Patch, p2: Patch, label_metric=None, offset1=None, offset2=None) -> np.ndarray:
    lo1, hi1, lo2, hi2 = p1.lo, p1.hi, p2.lo, p2.hi
    if offset1 is not None:
        lo1, hi1 = lo1 - offset1, hi1 - offset1
    if offset2 is not None:
        lo2, hi2 = lo2 - offset2, hi2 - offset2
    geo = hausdorff_arrays(lo1[:, None, :], hi1[:, None, :], lo2[None, :, :], hi2[None, :, :])
    lab = label_matrix(p1.labels, p2.labels, p1.system, label_metric)
    return np.maximum(geo, lab)


# -- bottleneck assignment ----------------------------------------------------

def _perfect_matching(mask: np.ndarray):
    m = maximum_bipartite_matching(csr_matrix(mask.astype(np.int8)), perm_type="column")
    return m if np.all(m >= 0) else None


def bottleneck_assignment(cost: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimise the largest cost over perfect matchings of a square matrix.

    Binary search over the sorted distinct entries; feasibility of a
    threshold is a perfect bipartite matching on the entries below it.
    Returns the value and ``perm`` with row i matched to column perm[i].
    """
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return 0.0, np.zeros(0, dtype=int)
    values = np.unique(cost)
    # the bottleneck is at least the largest row/column minimum
    floor = max(cost.min(axis=1).max(), cost.min(axis=0).max())
    lo = int(np.searchsorted(values, floor))
    hi = len(values) - 1
    best = _perfect_matching(cost <= values[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        m = _perfect_matching(cost <= values[mid])
        if m is None:
            lo = mid + 1
        else:
            hi, best = mid, m
    if best is None or values[hi] != values[lo]:
        best = _perfect_matching(cost <= values[lo])
    return float(values[lo]), np.asarray(best, dtype=int)


def patch_distance(p1: Patch, p2: Patch, label_metric=None, return_bijection: bool = False):
    """Best-fit bijection distance; patches of different sizes are at distance 1."""
    if len(p1) != len(p2):
        return (1.0, None) if return_bijection else 1.0
    d, perm = bottleneck_assignment(tile_distance_matrix(p1, p2, label_metric))
    d = min(d, 1.0)
    return (d, perm) if return_bijection else d


# -- tiling distance ----------------------------------------------------------

def _box_distances(lo: np.ndarray, hi: np.ndarray, center: np.ndarray) -> np.ndarray:
    return np.sqrt((np.maximum(np.maximum(lo - center, 0.0), center - hi) ** 2).sum(axis=1))


class _Tiling:
    """Arrays of a window, with box-to-centre distances cached per centre."""

    def __init__(self, w: TilingWindow):
        self.w = w
        self.patch = w.patch
        self.lo, self.hi = w.patch.lo, w.patch.hi

    def radius(self, center) -> float:
        return self.w.window.inner_radius(center)


def _feasible(t1: _Tiling, t2: _Tiling, center, eps: float, label_metric) -> bool:
    """Do sub-patches covering B_{1/eps}(center) exist at patch distance < eps?"""
    R = 1.0 / eps
    d1 = _box_distances(t1.lo, t1.hi, center)
    d2 = _box_distances(t2.lo, t2.hi, center)
    req1, req2 = d1 < R, d2 < R
    cand1, cand2 = np.nonzero(d1 < R + eps)[0], np.nonzero(d2 < R + eps)[0]
    geo = hausdorff_arrays(t1.lo[cand1][:, None, :], t1.hi[cand1][:, None, :],
                           t2.lo[cand2][None, :, :], t2.hi[cand2][None, :, :])
    lab = label_matrix([t1.patch.labels[i] for i in cand1], [t2.patch.labels[j] for j in cand2],
                       t1.patch.system, label_metric)
    ok = np.maximum(geo, lab) < eps
    r1, r2 = req1[cand1], req2[cand2]
    if r1.sum() == r2.sum() and ok[np.ix_(r1, r2)].shape[0] > 0:
        if _perfect_matching(ok[np.ix_(r1, r2)]) is not None:
            return True
    # Matching that saturates every required tile on both sides; optional tiles may go
    # unmatched (dummy columns/rows). Zero-cost perfect assignment <=> feasible.
    n1, n2 = len(cand1), len(cand2)
    big = 1.0
    cost = np.full((n1 + n2, n2 + n1), 2 * big)
    cost[:n1, :n2] = np.where(ok, 0.0, 2 * big)
    cost[np.arange(n1), n2 + np.arange(n1)] = np.where(r1, big, 0.0)
    cost[n1 + np.arange(n2), np.arange(n2)] = np.where(r2, big, 0.0)
    cost[n1:, n2:] = 0.0
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].sum() == 0.0)


def tilings_within(w1: TilingWindow, w2: TilingWindow, eps: float, center=None, label_metric=None) -> bool:
    """Certify d(T1 - x, T2 - x) < eps at ``x = center`` from window data."""
    center = np.zeros(w1.window.dim) if center is None else np.atleast_1d(np.asarray(center, float))
    if eps > 1.0:
        return True
    need = 1.0 / eps + eps
    if min(w1.window.inner_radius(center), w2.window.inner_radius(center)) < need:
        raise InsufficientWindow(f"need radius {need:.4g} about {center}")
    return _feasible(_Tiling(w1), _Tiling(w2), center, eps, label_metric)


def _eps_min(rho: float) -> float:
    if rho < 2.0:
        raise InsufficientWindow(f"window radius {rho:.4g} about the centre is below 2")
    return (rho - math.sqrt(rho * rho - 4.0)) / 2.0


def tiling_distance(w1: TilingWindow, w2: TilingWindow, tol: float = 1e-3, label_metric=None,
                    center=None) -> float:
    """Bisection for inf{eps : sub-patches covering B_{1/eps} are eps-close}, capped at 1."""
    if w1.window.dim != w2.window.dim:
        raise DimensionMismatch("windows of different dimension")
    center = np.zeros(w1.window.dim) if center is None else np.atleast_1d(np.asarray(center, float))
    t1, t2 = _Tiling(w1), _Tiling(w2)
    rho = min(t1.radius(center), t2.radius(center))
    eps_lo = _eps_min(rho)

    def good(e):
        return _feasible(t1, t2, center, e, label_metric)

    if not good(1.0):
        return 1.0
    if good(eps_lo):
        if eps_lo <= tol:
            return eps_lo
        raise InsufficientWindow(f"distance below {eps_lo:.4g}; cannot certify to tol={tol}")
    lo, hi = eps_lo, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if good(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class DLResult:
    value: float
    grid: float


def dL_distance(w1: TilingWindow, w2: TilingWindow, L: float, grid: float, tol: float = 1e-3,
                label_metric=None) -> DLResult:
    """Sup of d(T1 - x, T2 - x) over a grid of x in [0, L]^d.

    A lower bound for the continuous supremum that converges as grid -> 0.
    """
    if grid <= 0:
        raise ValueError("grid step must be positive")
    d = w1.window.dim
    steps = int(math.ceil(L / grid - 1e-12))
    ticks = np.linspace(0.0, L, steps + 1) if steps > 0 else np.zeros(1)
    mesh = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    best = 0.0
    for x in mesh:
        best = max(best, tiling_distance(w1, w2, tol, label_metric, center=x))
        if best >= 1.0:
            break
    return DLResult(best, float(ticks[1] - ticks[0]) if steps > 0 else 0.0)
