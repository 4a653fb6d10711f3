"""Variable-length substitution on the line.

A tile of length x in [1,2] inflates to one tile of length 3x/2; a tile of
length x in (2,3] inflates to two tiles, lengths x then x/2. Every tile of
an n-fold iterate has length (2^j / 3^k) L where L = (3/2)^n x is the
supertile length, and the exponent pair (j, k) is what we store.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (Box, InsufficientWindow, Label, OutOfRange, Patch, SizeLimit, Tile,
                   TilingWindow, anchored_window)

SYSTEM = "subst1d"
SIZE_LIMIT = 10 ** 8
SPLIT_AT = 2.0
# Lengths computed in floating point may land a few ulps above 2 when the exact value is 2.
_SPLIT_SLACK = 1e-12
_RANGE_TOL = 1e-9


def _check_seed(x: float) -> float:
    x = float(x)
    if not (1.0 - _RANGE_TOL <= x <= 3.0 + _RANGE_TOL):
        raise OutOfRange(f"length {x} outside [1, 3]")
    return x


def substitute(x: float) -> list[float]:
    x = _check_seed(x)
    if x <= SPLIT_AT:
        return [1.5 * x]
    return [x, x / 2.0]


def _rel(j: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.power(2.0, j) / np.power(3.0, k)


@dataclass(frozen=True)
class VarSupertile:
    level: int
    seed: float
    j: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)

    @property
    def total_length(self) -> float:
        return 1.5 ** self.level * self.seed

    @property
    def lengths(self) -> np.ndarray:
        return _rel(self.j, self.k) * self.total_length

    @property
    def lefts(self) -> np.ndarray:
        ell = self.lengths
        out = np.empty_like(ell)
        out[0] = 0.0
        np.cumsum(ell[:-1], out=out[1:])
        return out

    def __len__(self):
        return len(self.j)

    def to_patch(self, origin: float = 0.0) -> Patch:
        return lengths_to_patch(self.lengths, origin)

    def to_window(self) -> TilingWindow:
        p = self.to_patch()
        return TilingWindow(p, p.bounding_box(), self.provenance())

    def provenance(self) -> dict:
        return {"system": SYSTEM, "seed": self.seed, "level": self.level}


def lengths_to_patch(lengths: Sequence[float], origin: float = 0.0) -> Patch:
    """Tiles laid end to end from ``origin``, labelled by length, control point at the left end."""
    ell = np.asarray(lengths, dtype=float)
    lefts = origin + np.concatenate([[0.0], np.cumsum(ell[:-1])])
    tiles = tuple(Tile(Label(SYSTEM, float(w)), Box((a,), (a + w,)), (a,))
                  for a, w in zip(lefts.tolist(), ell.tolist()))
    return Patch(tiles)


def iterate(x: float, n: int, size_limit: int = SIZE_LIMIT) -> VarSupertile:
    x = _check_seed(x)
    if n < 0:
        raise ValueError("n must be nonnegative")
    j = np.zeros(1, dtype=np.int32)
    k = np.zeros(1, dtype=np.int32)
    L = x
    for _ in range(n):
        ell = _rel(j, k) * L
        split = ell > SPLIT_AT * (1.0 + _SPLIT_SLACK)
        count = len(j) + int(split.sum())
        if count > size_limit:
            raise SizeLimit(f"{count} tiles exceeds the cap {size_limit}")
        reps = np.where(split, 2, 1)
        nj = np.repeat(j, reps)
        nk = np.repeat(k, reps)
        # position of the left child of each split tile in the new arrays
        starts = np.cumsum(reps) - reps
        left = starts[split]
        nj[left] += 1
        nk[left] += 1
        nk[left + 1] += 1
        j, k = nj, nk
        L *= 1.5
    return VarSupertile(n, x, j, k)


def supertile_length_range(n: int) -> tuple[float, float]:
    s = 1.5 ** n
    return (s, 3.0 * s)


@dataclass(frozen=True)
class SubSupertiles:
    """The n-supertiles of an N-supertile, left to right."""

    L: float
    N: int
    n: int
    j: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)

    @property
    def lengths(self) -> np.ndarray:
        return _rel(self.j, self.k) * self.L

    @property
    def k_low(self) -> int:
        return int(self.k.min())

    @property
    def k_high(self) -> int:
        return int(self.k.max())

    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.j.tolist(), self.k.tolist(), self.lengths.tolist()))


def sub_supertile_lengths(L: float, N: int, n: int) -> SubSupertiles:
    if not 0 <= n < N:
        raise ValueError("need 0 <= n < N")
    lo, hi = supertile_length_range(N)
    if not (lo * (1 - _RANGE_TOL) <= L <= hi * (1 + _RANGE_TOL)):
        raise OutOfRange(f"L={L} outside [{lo}, {hi}]")
    # n-supertiles of the N-supertile correspond to tiles of the (N-n)-fold iterate of the seed
    it = iterate(min(max(L / 1.5 ** N, 1.0), 3.0), N - n)
    return SubSupertiles(float(L), N, n, it.j, it.k)


@dataclass
class PrimitivityReport:
    n: int
    eps: float
    passed: bool
    minimal_N: Optional[int]
    max_gap: dict = field(default_factory=dict)  # N -> largest gap over the samples


def _largest_gap(values: np.ndarray, lo: float, hi: float) -> float:
    v = np.unique(np.clip(values, lo, hi))
    return float(np.diff(np.concatenate([[lo], v, [hi]])).max())


def check_primitivity(n: int, eps: float, N: int, L_samples: Sequence[float]) -> PrimitivityReport:
    """Search N' = n+1 .. N for the first level whose supertiles realise n-supertile
    lengths filling the length range with gaps below eps.

    ``L_samples`` are normalised lengths in [1, 3]; at level N' the supertile
    of normalised length x has length x (3/2)^N'.
    """
    if eps <= 0 or N <= n:
        raise ValueError("need eps > 0 and N > n")
    lo, hi = supertile_length_range(n)
    report = PrimitivityReport(n, eps, False, None)
    for M in range(n + 1, N + 1):
        gaps = [_largest_gap(sub_supertile_lengths(x * 1.5 ** M, M, n).lengths, lo, hi)
                for x in L_samples]
        report.max_gap[M] = max(gaps)
        if report.max_gap[M] < eps:
            report.passed, report.minimal_N = True, M
            break
    return report


# -- transversal ------------------------------------------------------------

def sample_transversal(rng: np.random.Generator, level: int = 12, seed_length: Optional[float] = None,
                       margin: float = 0.25) -> TilingWindow:
    """Random supertile, random anchor tile away from its ends by a ``margin`` fraction."""
    x = float(rng.uniform(1.0, 3.0)) if seed_length is None else _check_seed(seed_length)
    st = iterate(x, level)
    lefts = st.lefts
    L = st.total_length
    inner = np.nonzero((lefts >= margin * L) & (lefts <= (1 - margin) * L))[0]
    pool = inner if len(inner) else np.arange(len(st))
    idx = int(pool[rng.integers(len(pool))])
    prov = st.provenance() | {"anchor_index": idx}
    return anchored_window(st.to_patch(), idx, prov)


def _origin_index(w: TilingWindow) -> int:
    c = w.patch.controls[:, 0]
    hit = np.nonzero(np.abs(c) <= 1e-9)[0]
    if len(hit) == 0:
        raise InsufficientWindow("no tile has its control point at the origin")
    return int(hit[0])


def transversal_discriminator(w1: TilingWindow, w2: TilingWindow, threshold: float = 1.5,
                              tau: float = 1e-9) -> Optional[float]:
    """Nearest tile slot (counted from the origin tile) where one window has a tile of
    length <= threshold and the other a tile longer than threshold.

    Returns the left endpoint of that tile in ``w1``, or None if the windows
    agree on the classification wherever both have data.
    """
    i1, i2 = _origin_index(w1), _origin_index(w2)
    len1 = (w1.patch.hi - w1.patch.lo)[:, 0]
    len2 = (w2.patch.hi - w2.patch.lo)[:, 0]
    small1 = len1 <= threshold + tau
    small2 = len2 <= threshold + tau
    right = min(len1.size - i1, len2.size - i2)
    left = min(i1, i2)
    for off in range(max(right, left + 1)):
        for s in ((off,) if off == 0 else (off, -off)):
            a, b = i1 + s, i2 + s
            if not (0 <= a < len1.size and 0 <= b < len2.size):
                continue
            if small1[a] != small2[b]:
                return float(w1.patch.lo[a, 0])
    return None


def scaled_pair(x: float, delta: float, level: int, anchor: int) -> tuple[TilingWindow, TilingWindow]:
    """Supertiles from seeds x(1+delta) and x, anchored at the same tile index."""
    a = iterate(x * (1 + delta), level)
    b = iterate(x, level)
    if anchor >= min(len(a), len(b)):
        raise ValueError("anchor index outside the shorter supertile")
    wa = anchored_window(a.to_patch(), anchor, a.provenance())
    wb = anchored_window(b.to_patch(), anchor, b.provenance())
    return wa, wb
