"""Solenoid extensions: unit tiles labelled by a compactification of the nonnegative integers.

n-supertiles obey P_k(l) = P_{k-1}(l) P_{k-1}(k-1), so apart from the head,
position i of a supertile carries the 2-adic valuation of i. Labels are
ints or the names of limit points.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .core import Box, InsufficientWindow, Label, Patch, SizeLimit, Tile, TilingWindow

SYSTEM = "solenoid"
BRUTE_MAX_N = 16


class LabelNotAllowed(ValueError):
    pass


# -- compactifications --------------------------------------------------------

@dataclass(frozen=True)
class CompactificationSpec:
    """Integers split into classes, class i converging monotonically to limits[i].

    Within a class the integer of rank r (0 for the smallest member) sits at
    2^-r on a line with its limit at 0; different classes are at distance 1.
    The object is itself a label metric: ``spec(a, b)``.
    """

    kind: str
    limits: tuple
    assign: Callable[[int], int] = field(compare=False)

    def check(self, label):
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if label < 0:
                raise LabelNotAllowed(f"negative label {label}")
            return
        if label not in self.limits:
            raise LabelNotAllowed(f"{label!r} is not a label of this compactification")

    def is_limit(self, label) -> bool:
        return label in self.limits

    def klass(self, label) -> int:
        self.check(label)
        if self.is_limit(label):
            return self.limits.index(label)
        return self.assign(int(label))

    def rank(self, m: int) -> int:
        return _rank(self, int(m))

    def coordinate(self, label) -> tuple[int, float]:
        """(class, position) with limits at position 0."""
        c = self.klass(label)
        if self.is_limit(label):
            return c, 0.0
        return c, 2.0 ** -self.rank(label)

    def __call__(self, a, b) -> float:
        ca, xa = self.coordinate(a)
        cb, xb = self.coordinate(b)
        return abs(xa - xb) if ca == cb else 1.0

    def matrix(self, v1: Sequence, v2: Sequence) -> np.ndarray:
        c1, x1 = map(np.array, zip(*[self.coordinate(v) for v in v1])) if len(v1) else (np.zeros(0), np.zeros(0))
        c2, x2 = map(np.array, zip(*[self.coordinate(v) for v in v2])) if len(v2) else (np.zeros(0), np.zeros(0))
        same = c1[:, None] == c2[None, :]
        return np.where(same, np.abs(x1[:, None] - x2[None, :]), 1.0)

    def __hash__(self):
        return hash((self.kind, self.limits))


@lru_cache(maxsize=None)
def _rank_table(spec: CompactificationSpec, upto: int) -> tuple:
    seen = Counter()
    out = []
    for n in range(upto + 1):
        c = spec.assign(n)
        out.append(seen[c])
        seen[c] += 1
    return tuple(out)


def _rank(spec: CompactificationSpec, m: int) -> int:
    size = 64
    while size <= m:
        size *= 2
    return _rank_table(spec, size)[m]


ONE_POINT = CompactificationSpec("one-point", ("lim",), lambda n: 0)
TWO_POINT = CompactificationSpec("two-point", ("lim_even", "lim_odd"), lambda n: n % 2)


def finite_set(k: int) -> CompactificationSpec:
    """k limit points; integer n converges to limit n mod k."""
    return CompactificationSpec("finite-set", tuple(f"lim_{i}" for i in range(k)), lambda n: n % k)


def two_point(S: Callable[[int], bool]) -> CompactificationSpec:
    """Partition N0 into S and its complement, converging to 'lim_S' and 'lim_T'."""
    return CompactificationSpec("two-point", ("lim_S", "lim_T"), lambda n: 0 if S(n) else 1)


def spec_by_name(name: str) -> CompactificationSpec:
    if name == "one-point":
        return ONE_POINT
    if name == "two-point":
        return TWO_POINT
    if name.startswith("finite-"):
        return finite_set(int(name.split("-", 1)[1]))
    raise ValueError(f"unknown compactification {name!r}")


def label_distance(l1, l2, spec: CompactificationSpec = ONE_POINT) -> float:
    return spec(l1, l2)


# -- 2-adic helpers ---------------------------------------------------------------

def nu2(i: int) -> int:
    i = abs(int(i))
    if i == 0:
        raise ValueError("nu2(0) is undefined")
    return (i & -i).bit_length() - 1


def nu2_array(u: np.ndarray) -> np.ndarray:
    u = np.abs(np.asarray(u, dtype=np.int64))
    low = u & -u
    out = np.zeros(u.shape, dtype=np.int64)
    nz = low > 0
    out[nz] = np.round(np.log2(low[nz].astype(float))).astype(np.int64)
    return out


# -- supertiles -----------------------------------------------------------------

@dataclass(frozen=True)
class SolSupertile:
    level: int
    head: object
    labels: tuple

    def __len__(self):
        return len(self.labels)

    def to_window(self, origin: int = 0) -> TilingWindow:
        patch = unit_patch(self.labels, origin)
        prov = {"system": SYSTEM, "grid_offset": -origin, "levels": self.level, "head": self.head}
        return TilingWindow(patch, patch.bounding_box(), prov)


def _check_head(k: int, l, spec: CompactificationSpec):
    spec.check(l)
    if not spec.is_limit(l) and int(l) < k:
        raise LabelNotAllowed(f"head {l} is not allowed at level {k}")


@lru_cache(maxsize=64)
def _tail_block(k: int) -> tuple:
    """P_k(k) with the head stripped: the labels at positions 1 .. 2^k - 1."""
    if k == 0:
        return ()
    prev = _tail_block(k - 1)
    return prev + (k - 1,) + prev


def build_supertile(k: int, l, spec: CompactificationSpec = ONE_POINT) -> SolSupertile:
    if k < 0:
        raise ValueError("level must be nonnegative")
    _check_head(k, l, spec)
    if k == 0:
        return SolSupertile(0, l, (l,))
    left = build_supertile(k - 1, l, spec).labels
    right = (k - 1,) + _tail_block(k - 1)
    return SolSupertile(k, l, left + right)


def unit_patch(labels: Sequence, origin: int = 0) -> Patch:
    tiles = tuple(Tile(Label(SYSTEM, lab), Box((float(origin + i),), (float(origin + i + 1),)), (float(origin + i),))
                  for i, lab in enumerate(labels))
    return Patch(tiles)


# -- transition counts ------------------------------------------------------------

def _below(m, k, spec: CompactificationSpec) -> bool:
    """m < k in the order where every limit exceeds every integer."""
    mi, ki = spec.is_limit(m), spec.is_limit(k)
    if mi:
        return False
    return True if ki else int(m) < int(k)


def transition_count_formula(n: int, N: int, m, k, spec: CompactificationSpec = ONE_POINT) -> int:
    """Number of n-supertiles of type m inside P_N(k)."""
    if not 0 <= n < N:
        raise ValueError("need 0 <= n < N")
    if not spec.is_limit(m):
        mi = int(m)
        if n <= mi and _below(mi, k, spec) and mi < N:
            return 2 ** (N - (mi + 1))
        if mi == k and N <= mi:
            return 1
        return 0
    return 1 if m == k else 0


@lru_cache(maxsize=4096)
def _brute_counts(n: int, N: int, k, spec: CompactificationSpec) -> tuple:
    labels = build_supertile(N, k, spec).labels
    size = 2 ** n
    heads = Counter()
    for start in range(0, len(labels), size):
        block = labels[start:start + size]
        head = block[0]
        if block != build_supertile(n, head, spec).labels:
            raise AssertionError(f"block at {start} is not an {n}-supertile")
        heads[head] += 1
    return tuple(sorted(heads.items(), key=lambda kv: str(kv[0])))


def transition_count_brute(n: int, N: int, m, k, spec: CompactificationSpec = ONE_POINT) -> int:
    """Count by building P_N(k) and cutting it into blocks of length 2^n."""
    if N > BRUTE_MAX_N:
        raise SizeLimit(f"N={N} exceeds the brute-force cap {BRUTE_MAX_N}")
    if not 0 <= n < N:
        raise ValueError("need 0 <= n < N")
    return dict(_brute_counts(n, N, k, spec)).get(m, 0)


@dataclass
class SweepResult:
    rows: list      # (n, N, m, k, formula, brute)
    mismatches: int


def transition_sweep(max_N: int = 12, max_label: int = 14, spec: CompactificationSpec = ONE_POINT,
                     include_limits: bool = True) -> SweepResult:
    rows = []
    bad = 0
    extra = list(spec.limits) if include_limits else []
    for N in range(1, max_N + 1):
        for n in range(N):
            for k in list(range(N, max_label + 1)) + extra:
                for m in list(range(0, max_label + 1)) + extra:
                    f = transition_count_formula(n, N, m, k, spec)
                    b = transition_count_brute(n, N, m, k, spec)
                    bad += f != b
                    rows.append((n, N, m, k, f, b))
    return SweepResult(rows, bad)


def measure_weights(n: int, labels: Iterable[int]) -> np.ndarray:
    """Volume-normalised, transition-consistent weights 2^-(m+1) on n-supertile types m >= n."""
    labels = np.asarray(list(labels))
    return np.where(labels >= n, 2.0 ** -(labels + 1.0), 0.0)


# -- Toeplitz tilings -------------------------------------------------------------

def toeplitz_labels(positions: Sequence[int], center_label=None, shift: int = 0,
                    spec: CompactificationSpec = ONE_POINT) -> list:
    center_label = spec.limits[0] if center_label is None else center_label
    spec.check(center_label)
    u = np.asarray(positions, dtype=np.int64) + shift
    vals = nu2_array(u).tolist()
    return [center_label if ui == 0 else v for ui, v in zip(u.tolist(), vals)]


def toeplitz_fill(lo: int, hi: int, center_label=None, spec: CompactificationSpec = ONE_POINT,
                  shift: int = 0) -> TilingWindow:
    """Unit tiles on [lo, hi]; the tile at position i carries nu2(i + shift), and the slot
    where i + shift = 0 carries ``center_label`` (first limit point by default)."""
    if hi <= lo:
        raise ValueError("empty window")
    labels = toeplitz_labels(range(lo, hi), center_label, shift, spec)
    patch = unit_patch(labels, lo)
    prov = {"system": SYSTEM, "grid_offset": shift, "levels": None}
    return TilingWindow(patch, patch.bounding_box(), prov)


def period_doubling_word(n: int, start: str = "X") -> str:
    rule = {"X": "YX", "Y": "XX"}
    w = start
    for _ in range(n):
        w = "".join(rule[c] for c in w)
    return w


def parity_word(labels: Sequence) -> str:
    return "".join("X" if int(v) % 2 == 0 else "Y" for v in labels)


# -- solenoid coordinates -----------------------------------------------------------

@dataclass(frozen=True)
class DyadicPoint:
    coords: tuple

    def compatible(self, tol: float = 1e-12) -> bool:
        c = self.coords
        return all(abs(((2 * c[n] - c[n - 1]) + 0.5) % 1.0 - 0.5) <= tol for n in range(1, len(c)))


def solenoid_map(w: TilingWindow, depth: int) -> DyadicPoint:
    """x_0 = position of the origin in its tile; x_n = x_{n-1}/2 in the left half of the
    n-supertile, (x_{n-1}+1)/2 in the right half (middle included)."""
    prov = w.provenance
    if prov.get("system") != SYSTEM or "grid_offset" not in prov:
        raise InsufficientWindow("window carries no supertile provenance")
    levels = prov.get("levels")
    if levels is not None and depth > levels:
        raise InsufficientWindow(f"supertile structure known to level {levels} only")
    anchor = prov.get("anchor_offset", (0.0,))[0]
    u = float(prov["grid_offset"]) - float(anchor)  # supertile coordinate of the origin
    frac = u - math.floor(u)
    coords = [frac]
    cell = math.floor(u)
    for n in range(1, depth + 1):
        right = (cell >> (n - 1)) & 1
        coords.append((coords[-1] + right) / 2.0)
    return DyadicPoint(tuple(coords))


# -- expansivity ---------------------------------------------------------------------

@dataclass
class ExpansivityWitness:
    N: int
    first: TilingWindow
    second: TilingWindow
    translates: list
    trivial: bool = False


def _uniform_level(spec: CompactificationSpec, delta: float, max_level: int = 60) -> Optional[int]:
    """Smallest N with every pair among {labels >= N} and the limits closer than delta."""
    for N in range(max_level + 1):
        pts = [spec.coordinate(l) for l in spec.limits]
        pts += [spec.coordinate(m) for m in range(N, N + 2 * len(spec.limits) + 64)]
        classes = {c for c, _ in pts}
        if len(classes) > 1:
            continue
        if max(x for _, x in pts) < delta:
            return N
    return None


def expansivity_probe(spec: CompactificationSpec = ONE_POINT, delta: float = 0.1, N_window: int = 64,
                      translate_samples: int = 16, seed: int = 0) -> Optional[ExpansivityWitness]:
    """Look for two tilings that stay delta-close under every sampled translate.

    The tilings put the origin at the same place in two different N-supertiles
    (the Toeplitz tiling and its shift by 2^N), so they differ only in labels
    >= N and the limit slot.
    """
    from .metrics import tilings_within
    from .core import translate

    if delta >= 1.0:
        a = toeplitz_fill(-N_window, N_window, spec=spec)
        return ExpansivityWitness(0, a, a, [], trivial=True)
    N = _uniform_level(spec, delta)
    if N is None:
        return None
    first = toeplitz_fill(-N_window, N_window, spec=spec)
    second = toeplitz_fill(-N_window, N_window, spec=spec, shift=2 ** N)
    reach = int(math.floor(N_window - (1.0 / delta + delta))) - 1
    if reach < 0:
        raise InsufficientWindow("window too small for the requested delta")
    rng = np.random.default_rng(seed)
    xs = sorted({0, *rng.integers(-reach, reach + 1, size=translate_samples).tolist()})
    for x in xs:
        if not tilings_within(translate(first, (-x,)), translate(second, (-x,)), delta, label_metric=spec):
            return None
    return ExpansivityWitness(N, first, second, xs)


# -- gap labelling --------------------------------------------------------------------

@dataclass(frozen=True)
class GapAlpha:
    value: float
    error: float
    cutoff: int


def gap_alpha(S: Union[Callable[[int], bool], Iterable[int]], precision: float = 1e-12) -> GapAlpha:
    """Partial sum of 2^-n over n in S, up to the cutoff where the tail bound 2^(1-cutoff) <= precision."""
    cutoff = max(1, math.ceil(1 - math.log2(precision)))
    member = S if callable(S) else set(S).__contains__
    value = math.fsum(2.0 ** -n for n in range(cutoff + 1) if member(n))
    return GapAlpha(value, 2.0 ** (1 - cutoff), cutoff)


# -- transversal -----------------------------------------------------------------------

def sample_transversal(rng: np.random.Generator, radius: int = 64, levels: int = 20,
                       spec: CompactificationSpec = ONE_POINT) -> TilingWindow:
    """Toeplitz tiling seen from a random integer position of a level-``levels`` supertile."""
    shift = int(rng.integers(1, 2 ** levels))
    return toeplitz_fill(-radius, radius, spec=spec, shift=shift)
