"""Covering and packing complexity of tiling spaces.

Two tilings count as d_L-close at (eps, L) when their patches on the box
[-1/eps, L + 1/eps]^d are within eps in the patch metric. For eps below half
the smallest tile side, an eps-close bijection must preserve the left-to-right
(and row) order of tiles, so patches are compared in sorted order and a
difference in tile count means "far".

The estimator is first-fit greedy: a drawn tiling becomes a new centre unless
it is close to an existing one. The centres form an eps-separated set whose
eps-balls cover every drawn sample, so its size is a lower bound for N3 and
an upper bound for N1 restricted to the samples.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Protocol, Sequence

import numpy as np

from . import dpv, subst1d
from .core import Box, DegenerateInput, InsufficientWindow
from .metrics import hausdorff_arrays
from .solenoid import ONE_POINT, CompactificationSpec, nu2_array

DEFAULT_BUDGET = 2000


class BudgetExhausted(RuntimeError):
    pass


def default_budget() -> int:
    return int(os.environ.get("ILC_BUDGET", DEFAULT_BUDGET))


# -- regions -------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """A window patch in comparison form.

    ``key`` must agree for two regions to be comparable (tile count, and any
    discrete data that has to match exactly). ``lo``/``hi`` are boxes (or
    points) compared by Hausdorff distance in order; ``lab`` holds label
    coordinates whose absolute differences give label distances.
    """

    key: tuple
    lo: np.ndarray
    hi: np.ndarray
    lab: np.ndarray


def region_distance(a: Region, b: Region) -> float:
    if a.key != b.key:
        return 1.0
    if len(a.lo) == 0:
        return 0.0
    geo = hausdorff_arrays(a.lo, a.hi, b.lo, b.hi).max()
    lab = np.abs(a.lab - b.lab).max() if len(a.lab) else 0.0
    return float(min(max(geo, lab), 1.0))


class Sampler(Protocol):
    name: str
    dim: int

    def draw(self, rng: np.random.Generator): ...

    def region(self, base, eps: float, L: float) -> Region: ...


def _interval_region(lo: np.ndarray, hi: np.ndarray, lab: np.ndarray) -> Region:
    return Region((len(lo),), lo[:, None], hi[:, None], lab)


class Subst1dSampler:
    """Random point of a random high-level supertile, weighted by length."""

    name = "subst1d"
    dim = 1

    def __init__(self, L_max: float, eps: float):
        span = L_max + 2.0 / eps + 2.0
        self.L_max, self.eps_min = L_max, eps
        self.level = max(1, math.ceil(math.log(4 * span) / math.log(1.5)))
        self.margin = 1.0 / eps + 1.0

    def draw(self, rng):
        u, v = rng.random(2)
        s = 1.5 ** self.level
        # length-weighted supertile length: density proportional to Q f_N(Q)
        c = math.log(2.0) + 3.0 * math.log(1.5)
        Q = s * math.exp(u * c) if u * c <= math.log(2.0) else 2 * s * math.exp((u * c - math.log(2.0)) / 3.0)
        x = min(max(Q / s, 1.0), 3.0)
        room = Q - self.L_max - 2 * self.margin
        return x, self.margin + v * room

    def region(self, base, eps, L):
        if eps < self.eps_min or L > self.L_max:
            raise InsufficientWindow("sampler was built for a smaller region")
        x, p = base
        st = subst1d.iterate(x, self.level)
        ell = st.lengths
        lo = st.lefts
        hi = lo + ell
        sel = (hi > p - 1.0 / eps) & (lo < p + L + 1.0 / eps)
        return _interval_region(lo[sel] - p, hi[sel] - p, 0.5 * ell[sel])


class DPVSampler:
    """Random point of a random high-level DPV supertile; only the needed region is built."""

    name = "dpv"
    dim = 2

    def __init__(self, L_max: float, eps: float, params=dpv.NATURAL):
        self.params, self.L_max, self.eps_min = params, L_max, eps
        span = L_max + 2.0 / eps + 2.0
        n = 1
        while True:
            w, h = dpv.level_sizes(n, params)
            if h.min() >= 3 * span and w.min() >= 3 * span:
                break
            n += 1
        self.level = n
        vol = dpv.supertile_volumes(n, params)
        rho = np.array(dpv.supertile_frequencies(n, params))
        self.p_type = float(rho[0] * vol[0])  # share of the plane in A-supertiles
        self.margin = 1.0 / eps + 1.0

    def draw(self, rng):
        u, vx, vy = rng.random(3)
        kind = "A" if u < self.p_type else "B"
        w, h = dpv.level_sizes(self.level, self.params)
        width = w[0] if kind == "A" else w[1]
        height = h[0]
        room = np.array([width, height]) - self.L_max - 2 * self.margin
        return kind, self.margin + np.array([vx, vy]) * room

    def region(self, base, eps, L):
        if eps < self.eps_min or L > self.L_max:
            raise InsufficientWindow("sampler was built for a smaller region")
        kind, p = base
        box = Box(tuple(p - 1.0 / eps), tuple(p + L + 1.0 / eps))
        r = dpv.supertile_region(kind, self.level, box, self.params)
        return dpv_region(r, p)


def dpv_region(r: dpv.RectPatch, p) -> Region:
    """Rows of a DPV patch: the words must match exactly, each row is then one rigid shift."""
    key = np.round(r.y * 1e6).astype(np.int64)
    order = np.lexsort((r.x, key))
    types, x, y = r.types[order], r.x[order], r.y[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(key[order]))[0] + 1])
    words = np.diff(np.concatenate([starts, [len(types)]]))
    pts = np.stack([x[starts] - p[0], y[starts] - p[1]], axis=1)
    return Region((len(types), words.tobytes(), types.astype(np.int8).tobytes()), pts, pts, np.zeros(0))


class SolenoidSampler:
    """Toeplitz tiling seen from a random real position."""

    name = "solenoid"
    dim = 1

    def __init__(self, L_max: float, eps: float, spec: CompactificationSpec = ONE_POINT, bits: int = 40):
        self.spec, self.L_max, self.eps_min, self.bits = spec, L_max, eps, bits

    def draw(self, rng):
        u = int(rng.integers(2 ** (self.bits - 1), 2 ** self.bits))
        return u + float(rng.random())

    def region(self, base, eps, L):
        x = base
        i = np.arange(math.floor(x - 1.0 / eps), math.ceil(x + L + 1.0 / eps), dtype=np.int64)
        i = i[(i + 1 > x - 1.0 / eps) & (i < x + L + 1.0 / eps)]
        vals = nu2_array(i)
        if self.spec is ONE_POINT:
            lab = 2.0 ** -vals.astype(float)
        else:
            # class index spaced by 4 keeps cross-class differences above the cap of 1
            coords = [self.spec.coordinate(int(v)) for v in vals]
            lab = np.array([4.0 * c + z for c, z in coords])
        lo = (i - x).astype(float)
        return _interval_region(lo, lo + 1.0, lab)


class PeriodicSampler:
    """Unit tiles, one label: the hull is a circle of circumference 1."""

    name = "periodic"
    dim = 1

    def draw(self, rng):
        return float(rng.random())

    def region(self, base, eps, L):
        x = base
        i = np.arange(math.floor(x - 1.0 / eps), math.ceil(x + L + 1.0 / eps))
        i = i[(i + 1 > x - 1.0 / eps) & (i < x + L + 1.0 / eps)]
        lo = (i - x).astype(float)
        return _interval_region(lo, lo + 1.0, np.zeros(len(lo)))


class SturmianSampler:
    """Unit tiles labelled by a Sturmian word of slope alpha at a random phase (an FLC system)."""

    name = "sturmian"
    dim = 1

    def __init__(self, alpha: float = (math.sqrt(5.0) - 1.0) / 2.0):
        self.alpha = alpha

    def draw(self, rng):
        return float(rng.random()), float(rng.random())

    def region(self, base, eps, L):
        theta, x = base
        i = np.arange(math.floor(x - 1.0 / eps), math.ceil(x + L + 1.0 / eps))
        i = i[(i + 1 > x - 1.0 / eps) & (i < x + L + 1.0 / eps)]
        word = np.floor((i + 1) * self.alpha + theta) - np.floor(i * self.alpha + theta)
        lo = (i - x).astype(float)
        return Region((len(lo), word.astype(np.int8).tobytes()), lo[:, None], lo[:, None] + 1.0, np.zeros(0))


class ExponentialSampler:
    """Synthetic fixture: a tiling is a random bit string and d_L sees its first L bits exactly,
    so N(eps, L) = 2^L for every eps < 1."""

    name = "exponential"
    dim = 1

    def __init__(self, L_max: int = 16):
        self.L_max = L_max

    def draw(self, rng):
        return rng.integers(0, 2, size=self.L_max, dtype=np.int8)

    def region(self, base, eps, L):
        bits = base[: int(L)]
        return Region((bits.tobytes(),), np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0))


# -- greedy estimator --------------------------------------------------------------

class _Group:
    """Centres sharing a key, stored in growing stacked arrays."""

    def __init__(self, r: Region):
        self.n = 0
        cap = 8
        self.lo = np.empty((cap,) + r.lo.shape)
        self.hi = np.empty((cap,) + r.hi.shape)
        self.lab = np.empty((cap,) + r.lab.shape)

    def add(self, r: Region):
        if self.n == len(self.lo):
            self.lo = np.concatenate([self.lo, np.empty_like(self.lo)])
            self.hi = np.concatenate([self.hi, np.empty_like(self.hi)])
            self.lab = np.concatenate([self.lab, np.empty_like(self.lab)])
        self.lo[self.n], self.hi[self.n], self.lab[self.n] = r.lo, r.hi, r.lab
        self.n += 1

    def any_close(self, r: Region, eps: float, head: int = 8) -> bool:
        if self.n == 0:
            return False
        if r.lo.shape[0] == 0 and r.lab.shape[0] == 0:
            return True
        idx = np.arange(self.n)
        # cheap screen on the first few entries, then the full comparison on survivors
        for sl in (slice(0, head), slice(None)):
            d = np.zeros(len(idx))
            if r.lo.shape[0]:
                d = hausdorff_arrays(self.lo[idx, sl], self.hi[idx, sl], r.lo[None, sl], r.hi[None, sl]).max(axis=1)
            if r.lab.shape[0]:
                d = np.maximum(d, np.abs(self.lab[idx, sl] - r.lab[None, sl]).max(axis=1))
            idx = idx[d < eps]
            if len(idx) == 0:
                return False
        return True


@dataclass
class ComplexityEstimate:
    eps: float
    L: float
    size: int
    samples: int
    seed: int
    saturated: bool
    system: str = ""
    semantics: str = "greedy eps-separated set: N3(eps,L) >= size, and size eps-balls cover every sample"

    @property
    def N1_upper(self) -> int:
        return self.size

    @property
    def N3_lower(self) -> int:
        return self.size

    @property
    def N2_lower(self) -> int:
        # N2(eps) >= N3(eps)
        return self.size


def estimate_N(eps: float, L: float, sampler, budget: Optional[int] = None, seed: int = 0,
               strict: bool = False) -> ComplexityEstimate:
    if not 0 < eps < 1 or L <= 0:
        raise ValueError("need 0 < eps < 1 and L > 0")
    budget = default_budget() if budget is None else int(budget)
    rng = np.random.default_rng(seed)
    groups: dict = {}
    size = 0
    for _ in range(budget):
        r = sampler.region(sampler.draw(rng), eps, L)
        g = groups.get(r.key)
        if g is None:
            g = groups[r.key] = _Group(r)
        if not g.any_close(r, eps):
            g.add(r)
            size += 1
    saturated = size == budget
    if saturated and strict:
        raise BudgetExhausted(f"every one of {budget} samples was a new centre")
    return ComplexityEstimate(eps, L, size, budget, seed, saturated, getattr(sampler, "name", ""))


def estimate_curve(eps: float, L_values: Sequence[float], sampler, budget: Optional[int] = None,
                   seed: int = 0) -> list[ComplexityEstimate]:
    """Estimates along L from the same sample sequence."""
    return [estimate_N(eps, L, sampler, budget, seed) for L in L_values]


# -- fits ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    ci: tuple
    intercept: float


def fit_scaling(estimates: Sequence[ComplexityEstimate], n_boot: int = 1000, seed: int = 0) -> ScalingFit:
    """Least-squares slope of log N against log(1 + L), with a bootstrap 95% interval."""
    L = np.array([e.L for e in estimates], dtype=float)
    N = np.array([e.size for e in estimates], dtype=float)
    if len(np.unique(L)) < 5 or L.max() < 10 * L.min():
        raise DegenerateInput("need at least 5 values of L spanning a decade")
    X, Y = np.log1p(L), np.log(N)
    alpha, b = np.polyfit(X, Y, 1)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, len(X), len(X))
        if len(np.unique(X[idx])) < 2:
            continue
        boots.append(np.polyfit(X[idx], Y[idx], 1)[0])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return ScalingFit(float(alpha), (float(lo), float(hi)), float(b))


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    L_tail: tuple
    note: str = "max of log N / L^d over the tail of the L values; estimates a limsup from finite data"


def epsilon_entropy(estimates: Sequence[ComplexityEstimate], d: int = 1) -> EntropyEstimate:
    if len(estimates) < 2:
        raise DegenerateInput("need estimates at two or more L")
    est = sorted(estimates, key=lambda e: e.L)
    tail = est[len(est) // 2:]
    vals = [math.log(e.size) / e.L ** d for e in tail]
    return EntropyEstimate(max(vals), tuple(e.L for e in tail))


# -- exact counts for the periodic fixture -----------------------------------------------

@dataclass(frozen=True)
class ExactCounts:
    N1: int  # open eps-balls covering the circle
    N2: int  # sets of diameter < eps covering the circle
    N3: int  # largest set with pairwise distances >= eps


def periodic_counts(eps) -> ExactCounts:
    """Exact covering/packing numbers of the circle R/Z with its arc metric, for 0 < eps <= 1/4.

    The hull of the unit-tile periodic tiling is this circle and d_L is the arc
    metric for every L.
    """
    e = Fraction(eps).limit_denominator(10 ** 9) if not isinstance(eps, Fraction) else eps
    if not 0 < e <= Fraction(1, 4):
        raise ValueError("formulas hold for 0 < eps <= 1/4")
    # n open arcs of length 2e cover iff 2ne > 1; n sets of diameter < e are arcs shorter than e
    n1 = math.floor(1 / (2 * e)) + 1
    n2 = math.floor(1 / e) + 1
    # n points pairwise >= e apart fit iff ne <= 1
    n3 = math.floor(1 / e)
    return ExactCounts(n1, n2, n3)


def greedy_circle(eps: float, budget: int, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    centres: list[float] = []
    for _ in range(budget):
        x = float(rng.random())
        c = np.array(centres)
        if len(c) and np.any(np.minimum(np.abs(c - x), 1 - np.abs(c - x)) < eps):
            continue
        centres.append(x)
    return len(centres)
