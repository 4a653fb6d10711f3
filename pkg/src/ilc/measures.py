"""Trim sets, occurrence counts, supertile measures and frequency estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import dpv, solenoid, subst1d
from .core import Box, InsufficientWindow, OutOfRange, Patch, TilingWindow, translate, van_hove_ratio
from .metrics import _perfect_matching, hausdorff_arrays, label_matrix

C_SUBST = 3.0 * math.log(3.0) - 2.0 * math.log(2.0)


class QuadratureFailure(RuntimeError):
    pass


# -- trim sets and counting -----------------------------------------------------

@dataclass(frozen=True)
class TrimSet:
    """Patches within ``eps`` (patch metric, <=) of ``base`` after putting the control
    point of ``base.tiles[anchor]`` at the candidate offset."""

    base: Patch
    eps: float
    anchor: int = 0
    label_metric: Optional[Callable] = None

    @property
    def anchored(self) -> Patch:
        c = self.base.tiles[self.anchor].control
        return translate(self.base, tuple(-v for v in c))

    @property
    def system(self) -> str:
        return self.base.system


def length_family(lo: float, hi: float) -> TrimSet:
    """Single tiles of the variable-length system with length in [lo, hi]."""
    mid = 0.5 * (lo + hi)
    return TrimSet(subst1d.lengths_to_patch([mid]), 0.5 * (hi - lo))


def tile_family(system: str, label, support: Box, eps: float = 0.0) -> TrimSet:
    from .core import Label, Tile

    return TrimSet(Patch((Tile(Label(system, label), support, support.lo),)), eps)


def occurrences(I: TrimSet, W: TilingWindow, slack: float = 1e-12) -> np.ndarray:
    """Offsets (anchor control points) of the occurrences of I inside W's window."""
    base = I.anchored
    P = W.patch
    lo, hi = P.lo, P.hi
    inside = np.all(lo >= np.array(W.window.lo) - 1e-9, axis=1) & np.all(hi <= np.array(W.window.hi) + 1e-9, axis=1)
    tol = I.eps + slack
    if len(base) == 1:
        # every tile is a candidate anchor: compare shapes with control points aligned
        b_lo, b_hi = base.lo[0], base.hi[0]
        ctrl = P.controls
        geo = hausdorff_arrays(lo - ctrl, hi - ctrl, b_lo[None, :], b_hi[None, :])
        lab = label_matrix(P.labels, base.labels, P.system, I.label_metric)[:, 0]
        hit = (np.maximum(geo, lab) <= tol) & inside
        return ctrl[hit]
    tree = cKDTree(P.controls)
    d = P.dim
    reach = tol * math.sqrt(d)
    hits = []
    a_ctrl = np.array(base.tiles[I.anchor].control)
    for idx in np.nonzero(inside)[0]:
        x = P.controls[idx] - a_ctrl
        cand = []
        for t in range(len(base)):
            near = tree.query_ball_point(base.controls[t] + x, reach)
            cand.append(near)
        pool = sorted({c for near in cand for c in near if inside[c]})
        if len(pool) < len(base):
            continue
        pool = np.array(pool)
        geo = hausdorff_arrays(base.lo[:, None, :] + x, base.hi[:, None, :] + x, lo[pool][None], hi[pool][None])
        lab = label_matrix(base.labels, [P.labels[c] for c in pool], P.system, I.label_metric)
        ok = np.maximum(geo, lab) <= tol
        # the anchor must land on this very tile
        ok[I.anchor] &= pool == idx
        m = _perfect_matching(ok) if ok.shape[0] <= ok.shape[1] else None
        if m is None and ok.shape[0] < ok.shape[1]:
            m = _row_saturating(ok)
        if m is not None:
            hits.append(P.controls[idx])
    return np.array(hits).reshape(-1, P.dim)


def _row_saturating(ok: np.ndarray):
    from scipy.optimize import linear_sum_assignment

    rows, cols = linear_sum_assignment(np.where(ok, 0.0, 1.0))
    return cols if np.all(ok[rows, cols]) and len(rows) == ok.shape[0] else None


def count_occurrences(I: TrimSet, W: TilingWindow) -> int:
    return int(len(occurrences(I, W)))


def trim_certificate(I: TrimSet, windows: Sequence[TilingWindow]) -> bool:
    """No window yields two hits at the same offset."""
    for W in windows:
        off = occurrences(I, W)
        if len(off) and len(np.unique(np.round(off, 9), axis=0)) != len(off):
            return False
    return True


# -- quadrature ---------------------------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 60) -> float:
    """Adaptive Simpson rule with Richardson correction."""
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            raise QuadratureFailure(f"no convergence on [{a}, {b}]")
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2.0, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2.0, depth + 1))
    return total


def integrate_pieces(f, breaks: Sequence[float], tol: float) -> float:
    breaks = sorted(set(breaks))
    n = max(len(breaks) - 1, 1)
    return math.fsum(adaptive_simpson(f, a, b, tol / n) for a, b in zip(breaks[:-1], breaks[1:]))


# -- variable-length density ---------------------------------------------------------

def density(n: int, x, scale: float = 1.0):
    """f_n(x): 1/(C x^2) on [s, 2s], 3/(C x^2) on (2s, 3s], zero elsewhere; s = (3/2)^n."""
    s = 1.5 ** n
    x = np.asarray(x, dtype=float)
    out = np.where((x >= s) & (x <= 2 * s), 1.0, np.where((x > 2 * s) & (x <= 3 * s), 3.0, 0.0))
    out = scale * out / (C_SUBST * x * x)
    return float(out) if out.ndim == 0 else out


def _antiderivative(n: int, x: float) -> float:
    """Cumulative mass of f_n from s to x."""
    s = 1.5 ** n
    if x <= 2 * s:
        return (1.0 / s - 1.0 / x) / C_SUBST
    return (0.5 / s + 3.0 * (0.5 / s - 1.0 / x)) / C_SUBST


def rho_closed_form(n: int, a: float, b: float) -> float:
    lo, hi = subst1d.supertile_length_range(n)
    if a > b or a < lo * (1 - 1e-12) or b > hi * (1 + 1e-12):
        raise OutOfRange(f"[{a}, {b}] not inside [{lo}, {hi}]")
    a, b = max(a, lo), min(b, hi)
    return _antiderivative(n, b) - _antiderivative(n, a)


def total_mass(n: int) -> float:
    return (1.0 / 1.5 ** n) / C_SUBST


def inverse_cdf(n: int, u) -> np.ndarray:
    """Length Q at which the normalised cumulative mass of f_n reaches u."""
    s = 1.5 ** n
    m = np.asarray(u, dtype=float) * total_mass(n) * C_SUBST
    first = 0.5 / s
    left = 1.0 / (1.0 / s - np.minimum(m, first))
    right = 1.0 / (0.5 / s - (m - first) / 3.0)
    return np.where(m <= first, left, right)


# -- supertile measure sequences -------------------------------------------------------

@dataclass(frozen=True)
class Subst1dMeasure:
    """rho_n(dQ) = scale * f_n(Q) dQ on n-supertile lengths Q."""

    scale: float = 1.0
    system: str = "subst1d"

    def density(self, n: int, x):
        return density(n, x, self.scale)

    def breaks(self, n: int) -> list[float]:
        s = 1.5 ** n
        return [s, 2 * s, 3 * s]

    def mass(self, n: int, a: float, b: float) -> float:
        return self.scale * rho_closed_form(n, a, b)


@dataclass(frozen=True)
class DPVMeasure:
    params: dpv.DPVParams = dpv.NATURAL
    system: str = "dpv"

    def weights(self, n: int) -> np.ndarray:
        return np.array(dpv.supertile_frequencies(n, self.params))

    def volumes(self, n: int) -> np.ndarray:
        return dpv.supertile_volumes(n, self.params)


@dataclass(frozen=True)
class SolenoidMeasure:
    spec: solenoid.CompactificationSpec = solenoid.ONE_POINT
    max_label: int = 60
    system: str = "solenoid"

    def labels(self, n: int) -> np.ndarray:
        return np.arange(n, self.max_label + 1)

    def weights(self, n: int) -> np.ndarray:
        return solenoid.measure_weights(n, self.labels(n))


def check_volume_normalized(rho, n: int, tol: float = 1e-9) -> float:
    if isinstance(rho, Subst1dMeasure):
        val = integrate_pieces(lambda x: x * rho.density(n, x), rho.breaks(n), tol / 10.0)
        return abs(val - 1.0)
    if isinstance(rho, DPVMeasure):
        return abs(float(rho.weights(n) @ rho.volumes(n)) - 1.0)
    if isinstance(rho, SolenoidMeasure):
        # each n-supertile has volume 2^n; the tail beyond max_label is added in closed form
        tail = 2.0 ** -(rho.max_label + 1)
        return abs(float(rho.weights(n).sum() + tail) * 2 ** n - 1.0)
    raise TypeError(f"unsupported measure {type(rho).__name__}")


def _push_down(g: Callable, N: int) -> Callable:
    """Density on (N-1)-supertile lengths induced by density g on N-supertile lengths.

    An N-supertile of length Q <= 2 (3/2)^N holds one (N-1)-supertile of length Q;
    a longer one holds two, of lengths 2Q/3 and Q/3.
    """
    s = 1.5 ** N
    lo, hi = s, 3 * s

    def inside(q):
        return (q >= lo) & (q <= hi)

    def h(y):
        y = np.asarray(y, dtype=float)
        one = np.where(inside(y) & (y <= 2 * s), g(np.clip(y, lo, hi)), 0.0)
        q2 = 1.5 * y
        two = np.where(inside(q2) & (q2 > 2 * s), 1.5 * g(np.clip(q2, lo, hi)), 0.0)
        q3 = 3.0 * y
        three = np.where(inside(q3) & (q3 > 2 * s), 3.0 * g(np.clip(q3, lo, hi)), 0.0)
        return one + two + three

    return h


def pushed_density(rho: Subst1dMeasure, n: int, N: int):
    """Density of sum_Q M_{n,N}(., Q) rho_N(dQ), plus the breakpoints of that density."""
    g = lambda x: rho.density(N, x)
    breaks = set(rho.breaks(N))
    for level in range(N, n, -1):
        g = _push_down(g, level)
        s = 1.5 ** level
        breaks = {b for x in breaks | {2 * s} for b in (x, 2 * x / 3, x / 3)}
        lo, hi = subst1d.supertile_length_range(level - 1)
        breaks = {b for b in breaks if lo <= b <= hi} | {lo, hi}
    return g, sorted(breaks)


def check_transition_consistency(rho, n: int, N: int, tol: float = 1e-9, width: float = 0.1) -> float:
    """sup over test sets I of |rho_n(I) - (M_{n,N} rho_N)(I)|."""
    if not n < N:
        raise ValueError("need n < N")
    if isinstance(rho, Subst1dMeasure):
        g, breaks = pushed_density(rho, n, N)
        lo, hi = subst1d.supertile_length_range(n)
        w = width * 1.5 ** n
        edges = np.arange(lo, hi + 0.5 * w, w)
        edges[-1] = hi
        worst = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            pieces = [a] + [x for x in breaks if a < x < b] + [b]
            pushed = integrate_pieces(g, pieces, tol / 10.0)
            worst = max(worst, abs(rho.mass(n, a, b) - pushed))
        return worst
    if isinstance(rho, DPVMeasure):
        M = np.linalg.matrix_power(dpv.transition_matrix(), N - n).astype(float)
        return float(np.max(np.abs(rho.weights(n) - M @ rho.weights(N))))
    if isinstance(rho, SolenoidMeasure):
        ks = rho.labels(N)
        wN = rho.weights(N)
        worst = 0.0
        for m in rho.labels(n):
            if m > rho.max_label - 1:
                break
            pushed = sum(solenoid.transition_count_formula(n, N, int(m), int(k), rho.spec) * w
                         for k, w in zip(ks, wN))
            # labels above max_label: each contributes 2^(N-m-1) 2^-(k+1) when m < N
            if m < N:
                pushed += 2.0 ** (N - m - 1) * 2.0 ** -(rho.max_label + 1)
            worst = max(worst, abs(solenoid.measure_weights(n, [m])[0] - pushed))
        return worst
    raise TypeError(f"unsupported measure {type(rho).__name__}")


# -- frequency estimates ----------------------------------------------------------------

@dataclass
class TransitionEstimate:
    levels: list
    values: list
    converged: bool

    @property
    def value(self) -> float:
        return self.values[-1]


def _converged(values: Sequence[float], rel: float = 1e-3, run: int = 3) -> bool:
    if len(values) < run + 1:
        return False
    tail = values[-(run + 1):]
    return all(abs(b - a) <= rel * max(abs(b), 1e-300) for a, b in zip(tail[:-1], tail[1:]))


def _integrand_subst1d(I: TrimSet, rho: Subst1dMeasure, n: int, samples: int) -> float:
    # midpoint quantiles of the normalised density: deterministic stratified sampling
    u = (np.arange(samples) + 0.5) / samples
    Qs = inverse_cdf(n, u)
    s = 1.5 ** n
    counts = [count_occurrences(I, subst1d.iterate(min(max(Q / s, 1.0), 3.0), n).to_window()) for Q in Qs]
    return rho.scale * total_mass(n) * float(np.mean(counts))


def freq_estimate_transition(I: TrimSet, rho, n_max: int, n_min: int = 0, samples: int = 64) -> TransitionEstimate:
    """Level-n values of the integral of #(I in P) over n-supertiles P against rho_n."""
    levels, values = [], []
    for n in range(n_min, n_max + 1):
        if isinstance(rho, Subst1dMeasure):
            v = _integrand_subst1d(I, rho, n, samples)
        elif isinstance(rho, DPVMeasure):
            w = rho.weights(n)
            v = sum(w[t] * count_occurrences(I, dpv.supertile(name, n, rho.params).to_window())
                    for t, name in enumerate(("A", "B")))
        elif isinstance(rho, SolenoidMeasure):
            labs = rho.labels(n)[: 24]
            w = rho.weights(n)[: 24]
            v = sum(wi * count_occurrences(I, solenoid.build_supertile(n, int(m), rho.spec).to_window())
                    for m, wi in zip(labs, w))
        else:
            raise TypeError(f"unsupported measure {type(rho).__name__}")
        levels.append(n)
        values.append(float(v))
    return TransitionEstimate(levels, values, _converged(values))


@dataclass(frozen=True)
class ErgodicEstimate:
    value: float
    count: int
    volume: float
    margin: float  # van Hove ratio of the window at the family's reach


def freq_estimate_ergodic(I: TrimSet, W: TilingWindow) -> ErgodicEstimate:
    """Occurrences per unit volume of the window, with the boundary fraction that can bias it."""
    reach = float(np.max(I.anchored.hi - I.anchored.lo.min(axis=0))) + I.eps
    if min(W.window.widths) < 2 * reach:
        raise InsufficientWindow("window smaller than the family's footprint")
    n = count_occurrences(I, W)
    vol = W.window.volume
    return ErgodicEstimate(n / vol, n, vol, van_hove_ratio(W.window, reach))
