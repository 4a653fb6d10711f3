"""Direct product variations of one-dimensional substitutions.

The worked example takes sigma_h: a -> abbb, b -> a horizontally and
sigma_v: c -> cc vertically. Tile A = a x c becomes two rows, ``ABBB``
on top of ``BBBA``; tile B = b x c becomes A on top of A. Supertiles are
kept as rows of horizontal letters (bottom to top), each row running from
a common left edge, which is how the geometric substitution concatenates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import (Box, DegenerateInput, Label, OverlapError, DisconnectedError, Patch, SizeLimit,
                   Tile, TilingWindow, TAU_GEOM, anchored_window, covers, sort_tiles)

SYSTEM = "dpv"
NATURAL_A = (1.0 + math.sqrt(13.0)) / 2.0
SIZE_LIMIT = 10 ** 8


@dataclass(frozen=True)
class DPVRule:
    """Horizontal and vertical substitutions plus the row layout of each tile type.

    ``layouts[(h, v)]`` lists rows bottom to top; row r is a rearrangement of
    ``h_sub[h]`` and carries vertical letter ``v_sub[v][r]``.
    """

    h_sub: dict
    v_sub: dict
    layouts: dict
    names: dict

    def __post_init__(self):
        for (h, v), rows in self.layouts.items():
            if len(rows) != len(self.v_sub[v]):
                raise ValueError(f"layout of {(h, v)} needs {len(self.v_sub[v])} rows")
            for row in rows:
                if sorted(row) != sorted(self.h_sub[h]):
                    raise ValueError(f"row {row!r} is not a rearrangement of {self.h_sub[h]!r}")
                for x in row:
                    for w in self.v_sub[v]:
                        if (x, w) not in self.names:
                            raise ValueError(f"tile type {(x, w)} has no name")

    @property
    def h_letters(self) -> tuple[str, ...]:
        return tuple(self.h_sub)

    @property
    def v_letters(self) -> tuple[str, ...]:
        return tuple(self.v_sub)

    @property
    def types(self) -> tuple[tuple[str, str], ...]:
        return tuple(self.names)

    @property
    def type_names(self) -> tuple[str, ...]:
        return tuple(self.names.values())

    def type_index(self, name: str) -> int:
        return self.type_names.index(name)

    def h_matrix(self) -> np.ndarray:
        """Abelianisation of sigma_h: entry (x, y) counts x in sigma_h(y)."""
        H = self.h_letters
        return np.array([[self.h_sub[y].count(x) for y in H] for x in H], dtype=np.int64)

    def v_matrix(self) -> np.ndarray:
        V = self.v_letters
        return np.array([[self.v_sub[y].count(x) for y in V] for x in V], dtype=np.int64)


EXAMPLE = DPVRule(
    h_sub={"a": "abbb", "b": "a"},
    v_sub={"c": "cc"},
    layouts={("a", "c"): ("bbba", "abbb"), ("b", "c"): ("a", "a")},
    names={("a", "c"): "A", ("b", "c"): "B"},
)

DIRECT_PRODUCT = DPVRule(
    h_sub={"a": "abbb", "b": "a"},
    v_sub={"c": "cc"},
    layouts={("a", "c"): ("abbb", "abbb"), ("b", "c"): ("a", "a")},
    names={("a", "c"): "A", ("b", "c"): "B"},
)


@dataclass(frozen=True)
class DPVParams:
    a: float = NATURAL_A
    b: float = 1.0
    c: float = 1.0
    rational: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("widths and height must be positive")
        if self.rational is not None:
            p, q = self.rational
            if Fraction(self.a).limit_denominator(10 ** 6) * q != Fraction(self.b).limit_denominator(10 ** 6) * p:
                raise ValueError(f"a/b is not {p}/{q}")

    @property
    def widths(self) -> dict:
        return {"a": self.a, "b": self.b}

    @property
    def heights(self) -> dict:
        return {"c": self.c}


@dataclass(frozen=True)
class Geometry:
    """Letter sizes for a general rule."""

    widths: dict
    heights: dict


NATURAL = DPVParams()


# -- rectangle patches ----------------------------------------------------------

@dataclass(frozen=True)
class RectPatch:
    """Rectangles by type index with lower-left corners and sizes."""

    types: np.ndarray
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    h: np.ndarray
    names: tuple = ("A", "B")

    def __len__(self):
        return len(self.types)

    def counts(self) -> np.ndarray:
        return np.bincount(self.types, minlength=len(self.names))

    def canonical(self) -> "RectPatch":
        # rounded keys so float noise in coordinates does not reorder ties
        order = np.lexsort((np.round(self.y * 1e6), np.round(self.x * 1e6)))
        return RectPatch(self.types[order], self.x[order], self.y[order], self.w[order], self.h[order],
                         self.names)

    def bounding_box(self) -> Box:
        return Box((self.x.min(), self.y.min()), ((self.x + self.w).max(), (self.y + self.h).max()))

    def to_patch(self) -> Patch:
        c = self.canonical()
        tiles = tuple(
            Tile(Label(SYSTEM, c.names[t]), Box((x, y), (x + w, y + h)), (x, y))
            for t, x, y, w, h in zip(c.types.tolist(), c.x.tolist(), c.y.tolist(), c.w.tolist(), c.h.tolist()))
        # exact control order, matching what make_patch produces on reload
        return Patch(sort_tiles(tiles))

    def to_window(self, provenance: Optional[dict] = None) -> TilingWindow:
        p = self.to_patch()
        return TilingWindow(p, p.bounding_box(), dict(provenance or {}))

    @classmethod
    def from_patch(cls, patch: Patch, names: Sequence[str] = ("A", "B")) -> "RectPatch":
        names = tuple(names)
        types = np.array([names.index(v) for v in patch.labels], dtype=np.int64)
        lo, hi = patch.lo, patch.hi
        return cls(types, lo[:, 0].copy(), lo[:, 1].copy(), hi[:, 0] - lo[:, 0], hi[:, 1] - lo[:, 1], names)


def same_tiles(p: RectPatch, q: RectPatch, tol: float = 1e-9) -> bool:
    """Tile-for-tile equality: identical types, geometry within tol."""
    if len(p) != len(q):
        return False
    p, q = p.canonical(), q.canonical()
    if not np.array_equal(p.types, q.types):
        return False
    return all(np.max(np.abs(u - v), initial=0.0) <= tol for u, v in ((p.x, q.x), (p.y, q.y), (p.w, q.w), (p.h, q.h)))


def _bands(r: RectPatch, tol: float = TAU_GEOM):
    """Group tiles into horizontal bands of equal bottom edge; yields (y, h, index array sorted by x)."""
    key = np.round(r.y / max(tol, 1e-12)).astype(np.int64)
    order = np.lexsort((r.x, key))
    key_sorted = key[order]
    cuts = np.nonzero(np.diff(key_sorted))[0] + 1
    for idx in np.split(order, cuts):
        yield float(r.y[idx[0]]), float(r.h[idx[0]]), idx


def validate_rows(r: RectPatch, tol: float = TAU_GEOM) -> None:
    """Validity check for row-structured patches: each band is a gapless run of tiles,
    bands stack without overlap, and consecutive bands share some horizontal extent."""
    prev = None
    for y, h, idx in _bands(r, tol):
        if np.any(np.abs(r.h[idx] - h) > tol):
            raise OverlapError(f"band at y={y} mixes heights")
        x0, x1 = r.x[idx], r.x[idx] + r.w[idx]
        gap = x0[1:] - x1[:-1]
        if np.any(gap < -tol):
            raise OverlapError(f"tiles overlap in band y={y}")
        if np.any(gap > tol):
            raise DisconnectedError(f"gap in band y={y}")
        if prev is not None:
            py, ph, pl, pr = prev
            if y < py + ph - tol:
                raise OverlapError(f"bands at y={py} and y={y} overlap")
            if y > py + ph + tol or min(pr, x1[-1]) < max(pl, x0[0]) - tol:
                raise DisconnectedError(f"band y={y} does not touch the band below")
        prev = (y, h, float(x0[0]), float(x1[-1]))


# -- row substitution -----------------------------------------------------------

class _Tables:
    """Integer encodings of a rule used by the vectorised row substitution."""

    def __init__(self, rule: DPVRule):
        H, V = rule.h_letters, rule.v_letters
        self.rule = rule
        self.type_of = -np.ones((len(H), len(V)), dtype=np.int64)
        for t, (h, v) in enumerate(rule.types):
            self.type_of[H.index(h), V.index(v)] = t
        self.type_h = np.array([H.index(h) for h, _ in rule.types])
        self.type_v = np.array([V.index(v) for _, v in rule.types])
        # rows[v][r] = (flat letters, offsets, lengths) of row r of every h letter's layout
        self.rows = {}
        for vi, v in enumerate(V):
            out = []
            for r, w in enumerate(rule.v_sub[v]):
                words = [np.array([H.index(x) for x in rule.layouts[(h, v)][r]], dtype=np.int8)
                         if (h, v) in rule.layouts else np.zeros(0, dtype=np.int8) for h in H]
                lens = np.array([len(x) for x in words])
                offs = np.concatenate([[0], np.cumsum(lens)[:-1]])
                out.append((np.concatenate(words), offs, lens, V.index(w)))
            self.rows[vi] = out


_TABLE_CACHE: dict = {}


def _tables(rule: DPVRule) -> _Tables:
    key = id(rule)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _Tables(rule)
    return _TABLE_CACHE[key]


Rows = list  # list of (vertical letter index, int8 array of horizontal letter indices)


def substitute_rows(rows: Rows, rule: DPVRule = EXAMPLE) -> Rows:
    tb = _tables(rule)
    out = []
    for v, h in rows:
        for flat, offs, lens, w in tb.rows[v]:
            reps = lens[h]
            starts = np.cumsum(reps) - reps
            pos = np.arange(int(reps.sum())) - np.repeat(starts, reps)
            out.append((w, flat[np.repeat(offs[h], reps) + pos]))
    return out


def supertile_rows(kind: str, n: int, rule: DPVRule = EXAMPLE, size_limit: int = SIZE_LIMIT) -> Rows:
    tb = _tables(rule)
    t = rule.type_index(kind)
    rows = [(int(tb.type_v[t]), np.array([tb.type_h[t]], dtype=np.int8))]
    for _ in range(n):
        rows = substitute_rows(rows, rule)
        if sum(len(h) for _, h in rows) > size_limit:
            raise SizeLimit(f"supertile exceeds {size_limit} tiles")
    return rows


def row_counts(rows: Rows, rule: DPVRule = EXAMPLE) -> np.ndarray:
    tb = _tables(rule)
    out = np.zeros(len(rule.types), dtype=np.int64)
    for v, h in rows:
        out += np.bincount(tb.type_of[h.astype(np.int64), v], minlength=len(rule.types))
    return out


def rows_to_rects(rows: Rows, params, rule: DPVRule = EXAMPLE, origin=(0.0, 0.0)) -> RectPatch:
    tb = _tables(rule)
    wid = np.array([params.widths[x] for x in rule.h_letters], dtype=float)
    hgt = np.array([params.heights[x] for x in rule.v_letters], dtype=float)
    ts, xs, ys, ws, hs = [], [], [], [], []
    y = float(origin[1])
    for v, h in rows:
        hi = h.astype(np.int64)
        w = wid[hi]
        x = origin[0] + np.concatenate([[0.0], np.cumsum(w[:-1])])
        ts.append(tb.type_of[hi, v])
        xs.append(x)
        ws.append(w)
        ys.append(np.full(len(h), y))
        hs.append(np.full(len(h), hgt[v]))
        y += hgt[v]
    cat = np.concatenate
    return RectPatch(cat(ts), cat(xs), cat(ys), cat(ws), cat(hs), rule.type_names)


def rects_to_rows(r: RectPatch, params, rule: DPVRule = EXAMPLE, tol: float = 1e-9):
    """Split a row-structured patch into rows; returns (rows, lower-left corner)."""
    tb = _tables(rule)
    names = rule.type_names
    wid = {x: params.widths[x] for x in rule.h_letters}
    hgt = {x: params.heights[x] for x in rule.v_letters}
    rows, left, bottom, prev_top = [], None, None, None
    for y, h, idx in _bands(r, tol):
        tids = np.array([names.index(r.names[t]) for t in r.types[idx]])
        v = int(tb.type_v[tids[0]])
        if np.any(tb.type_v[tids] != v):
            raise OverlapError(f"band at y={y} mixes vertical letters")
        expect_w = np.array([wid[rule.h_letters[tb.type_h[t]]] for t in tids])
        if np.any(np.abs(r.w[idx] - expect_w) > tol) or abs(h - hgt[rule.v_letters[v]]) > tol:
            raise OverlapError(f"tile sizes in band y={y} disagree with the parameters")
        x0 = r.x[idx]
        if np.any(np.abs(x0[1:] - (x0[:-1] + r.w[idx][:-1])) > tol):
            raise OverlapError(f"band y={y} is not a gapless run")
        if left is None:
            left, bottom = float(x0[0]), y
        elif abs(x0[0] - left) > tol or abs(y - prev_top) > tol:
            raise OverlapError("rows must stack from a common left edge")
        prev_top = y + h
        rows.append((v, tb.type_h[tids].astype(np.int8)))
    return rows, (left, bottom)


def dpv_substitute(patch: RectPatch, params=NATURAL, rule: DPVRule = EXAMPLE) -> RectPatch:
    """One step of the geometric substitution, fixing the patch's lower-left corner."""
    rows, origin = rects_to_rows(patch, params, rule)
    out = rows_to_rects(substitute_rows(rows, rule), params, rule, origin)
    validate_rows(out)
    return out


def supertile(kind: str, n: int, params=NATURAL, rule: DPVRule = EXAMPLE) -> RectPatch:
    return rows_to_rects(supertile_rows(kind, n, rule), params, rule)


def single_tile(kind: str, params=NATURAL, rule: DPVRule = EXAMPLE) -> RectPatch:
    return supertile(kind, 0, params, rule)


# -- transition data ---------------------------------------------------------------

def transition_matrix(rule: DPVRule = EXAMPLE) -> np.ndarray:
    """Entry (i, j) counts tiles of type i in the substitution of type j."""
    tb = _tables(rule)
    m = len(rule.types)
    out = np.zeros((m, m), dtype=np.int64)
    for j in range(m):
        out[:, j] = row_counts(substitute_rows(supertile_rows(rule.type_names[j], 0, rule), rule), rule)
    return out


def perron_data() -> tuple[float, np.ndarray]:
    """lambda = 1 + sqrt(13) and v = (lambda, 6) with M v = lambda v (columns count images)."""
    lam = 1.0 + math.sqrt(13.0)
    return lam, np.array([lam, 6.0])


def supertile_volumes(n: int, params=NATURAL) -> np.ndarray:
    """(Vol P_n(A), Vol P_n(B)) = (ac, bc) M^n."""
    M = np.linalg.matrix_power(transition_matrix().astype(float), n)
    return np.array([params.a * params.c, params.b * params.c]) @ M


def normaliser(n: int, params=NATURAL) -> float:
    lam, v = perron_data()
    return float(v @ supertile_volumes(n, params))


def supertile_frequencies(n: int, params=NATURAL) -> tuple[float, float]:
    lam, v = perron_data()
    rho = v / normaliser(n, params)
    return float(rho[0]), float(rho[1])


# -- stepped surface --------------------------------------------------------------

@dataclass(frozen=True)
class FacetSurface:
    """Lattice facets: type index and integer corner (horizontal coords then vertical)."""

    types: np.ndarray
    corners: np.ndarray
    rule: DPVRule = field(default=EXAMPLE, repr=False)

    def __len__(self):
        return len(self.types)

    def counts(self) -> np.ndarray:
        return np.bincount(self.types, minlength=len(self.rule.types))

    def quads(self) -> np.ndarray:
        """Four integer vertices per facet, counter-clockwise seen from the front."""
        tb = _tables(self.rule)
        H = len(self.rule.h_letters)
        dim = self.corners.shape[1]
        eh = np.eye(dim, dtype=np.int64)[tb.type_h[self.types]]
        ev = np.eye(dim, dtype=np.int64)[H + tb.type_v[self.types]]
        c = self.corners
        return np.stack([c, c + eh, c + eh + ev, c + ev], axis=1)


def _facet_templates(rule: DPVRule):
    """For each type: (child types, horizontal offsets, vertical offsets)."""
    H, V = rule.h_letters, rule.v_letters
    tb = _tables(rule)
    out = []
    for h, v in rule.types:
        ts, dp, dq = [], [], []
        q = np.zeros(len(V), dtype=np.int64)
        for r, w in enumerate(rule.v_sub[v]):
            p = np.zeros(len(H), dtype=np.int64)
            for x in rule.layouts[(h, v)][r]:
                ts.append(tb.type_of[H.index(x), V.index(w)])
                dp.append(p.copy())
                dq.append(q.copy())
                p[H.index(x)] += 1
            q[V.index(w)] += 1
        out.append((np.array(ts), np.array(dp), np.array(dq)))
    return out


def build_stepped_surface(kind: str, n: int, rule: DPVRule = EXAMPLE, size_limit: int = 10 ** 7) -> FacetSurface:
    """Iterate the facet substitution: a facet at corner (p, q) maps its layout to
    corners (Mh p + prefix counts along the row, Mv q + prefix counts of rows)."""
    H = len(rule.h_letters)
    Mh, Mv = rule.h_matrix(), rule.v_matrix()
    templates = _facet_templates(rule)
    types = np.array([rule.type_index(kind)])
    corners = np.zeros((1, H + len(rule.v_letters)), dtype=np.int64)
    for _ in range(n):
        new_t, new_c = [], []
        for t, (ts, dp, dq) in enumerate(templates):
            sel = types == t
            if not sel.any():
                continue
            base_p = corners[sel, :H] @ Mh.T
            base_q = corners[sel, H:] @ Mv.T
            p = base_p[:, None, :] + dp[None]
            q = base_q[:, None, :] + dq[None]
            new_c.append(np.concatenate([p, q], axis=2).reshape(-1, corners.shape[1]))
            new_t.append(np.tile(ts, int(sel.sum())))
        types = np.concatenate(new_t)
        corners = np.concatenate(new_c)
        if len(types) > size_limit:
            raise SizeLimit(f"surface exceeds {size_limit} facets")
    order = np.lexsort(corners.T[::-1])
    return FacetSurface(types[order], corners[order], rule)


def project_surface(surface: FacetSurface, params=NATURAL) -> RectPatch:
    """Apply the projection (a b 0; 0 0 c): x = sum of widths * horizontal coords, y likewise."""
    rule = surface.rule
    tb = _tables(rule)
    H = len(rule.h_letters)
    wid = np.array([params.widths[x] for x in rule.h_letters], dtype=float)
    hgt = np.array([params.heights[x] for x in rule.v_letters], dtype=float)
    x = surface.corners[:, :H] @ wid
    y = surface.corners[:, H:] @ hgt
    out = RectPatch(surface.types.copy(), x, y, wid[tb.type_h[surface.types]], hgt[tb.type_v[surface.types]],
                    rule.type_names)
    validate_rows(out)
    return out


@dataclass(frozen=True)
class Hole:
    level: int  # vertical lattice coordinate of the missing horizontal faces
    area: int   # number of missing unit faces


def surface_holes(surface: FacetSurface) -> list[Hole]:
    """Horizontal holes of a 3-dimensional surface (two horizontal letters, one vertical).

    Each band of facets traces a monotone lattice path in the horizontal
    plane; where consecutive bands trace different paths the faces between
    them are missing. The area is summed over unit columns along the first axis.
    """
    if surface.corners.shape[1] != 3:
        raise ValueError("holes are defined for surfaces in Z^3")
    tb = _tables(surface.rule)
    is_a = tb.type_h[surface.types] == 0
    k = surface.corners[:, 2]
    paths = {}
    for level in np.unique(k):
        sel = (k == level) & is_a
        i, j = surface.corners[sel, 0], surface.corners[sel, 1]
        order = np.argsort(i)
        paths[int(level)] = (i[order], j[order])
    holes = []
    levels = sorted(paths)
    for lo, hi in zip(levels[:-1], levels[1:]):
        (i1, j1), (i2, j2) = paths[lo], paths[hi]
        if len(i1) != len(i2) or np.any(i1 != i2):
            raise ValueError("bands of different horizontal extent")
        area = int(np.abs(j1 - j2).sum())
        if area:
            holes.append(Hole(hi, area))
    return holes


# -- fault lines ------------------------------------------------------------------

@dataclass
class FaultLineReport:
    lines: list            # y of each full-width interior line
    offsets: list          # array of offsets per line
    candidates: list = field(default_factory=list)  # (y, offsets) for partial lines
    min_positive: Optional[float] = None

    def all_offsets(self) -> np.ndarray:
        return np.concatenate(self.offsets) if self.offsets else np.zeros(0)


def _nearest(src: np.ndarray, ref: np.ndarray) -> np.ndarray:
    if len(ref) == 0 or len(src) == 0:
        return np.zeros(0)
    pos = np.clip(np.searchsorted(ref, src), 1, len(ref)) if len(ref) > 1 else np.ones(len(src), dtype=int)
    left = ref[np.maximum(pos - 1, 0)]
    right = ref[np.minimum(pos, len(ref) - 1)]
    return np.minimum(np.abs(src - left), np.abs(src - right))


def find_fault_lines(patch: RectPatch, tol: float = TAU_GEOM) -> FaultLineReport:
    """Offsets between vertical edges just below and just above each interior horizontal line."""
    bands = list(_bands(patch, tol))
    bb = patch.bounding_box()
    rep = FaultLineReport([], [])
    for (y0, h0, below), (y1, _, above) in zip(bands[:-1], bands[1:]):
        if abs(y0 + h0 - y1) > tol:
            continue
        lb, rb = patch.x[below[0]], patch.x[below[-1]] + patch.w[below[-1]]
        la, ra = patch.x[above[0]], patch.x[above[-1]] + patch.w[above[-1]]
        lo, hi = max(lb, la), min(rb, ra)
        # interior cuts of each row inside the shared extent
        eb = patch.x[below][1:]
        ea = patch.x[above][1:]
        eb = eb[(eb > lo + tol) & (eb < hi - tol)]
        ea = ea[(ea > lo + tol) & (ea < hi - tol)]
        off = np.concatenate([_nearest(ea, eb), _nearest(eb, ea)])
        full = (abs(lo - bb.lo[0]) <= tol) and (abs(hi - bb.hi[0]) <= tol)
        if full:
            rep.lines.append(y1)
            rep.offsets.append(off)
        else:
            rep.candidates.append((y1, off))
    allo = rep.all_offsets()
    pos = allo[allo > tol]
    rep.min_positive = float(pos.min()) if len(pos) else None
    return rep


def fault_offsets_by_level(levels: Sequence[int], params=NATURAL, kind: str = "A",
                           rule: DPVRule = EXAMPLE) -> list[Optional[float]]:
    return [find_fault_lines(supertile(kind, n, params, rule)).min_positive for n in levels]


@dataclass(frozen=True)
class SpectrumConstraint:
    kind: str                       # "zero" or "lattice"
    modulus: Optional[Fraction]     # alpha.x lies in modulus * Z for kind "lattice"
    vertical: Optional[str] = None

    @property
    def text(self) -> str:
        if self.kind == "zero":
            return "α·x = 0"
        m = self.modulus
        return "α·x ∈ Z" if m == 1 else f"α·x ∈ {m}Z"

    def __str__(self):
        return self.text if self.vertical is None else f"{self.text}; {self.vertical}"


def _gcd_fraction(values: Sequence[Fraction]) -> Fraction:
    num = 0
    den = 1
    for f in values:
        den = den * f.denominator // math.gcd(den, f.denominator)
    for f in values:
        num = math.gcd(num, int(f * den))
    return Fraction(num, den)


def spectrum_constraints(shears: Sequence[float], tol: float = 1e-9, max_den: int = 1000,
                         by_level: Optional[Sequence[float]] = None,
                         height: Optional[float] = None) -> SpectrumConstraint:
    """Constraint on alpha.x from shear offsets: k alpha.x must be an integer for every shear k.

    Returns "zero" when two shears have a ratio with no rational approximation
    p/q (q <= max_den) within tol, when a shear is below tol but nonzero, or when
    the per-level minima in ``by_level`` strictly decrease (offsets that can be
    arbitrarily small). Otherwise all shears are integer multiples of some m and
    alpha.x lies in (1/m)Z.
    """
    vertical = None if height is None else f"vertical: (0, {height:g}·Z[1/2])"
    arr = np.abs(np.asarray(shears, dtype=float))
    nz = arr[arr > 0]
    if len(nz) == 0:
        raise DegenerateInput("all shears are zero")
    zero = SpectrumConstraint("zero", None, vertical)
    if np.any(nz < tol):
        return zero
    if by_level is not None:
        mins = [v for v in by_level if v is not None]
        if len(mins) >= 2 and all(b < a - tol for a, b in zip(mins[:-1], mins[1:])):
            return zero
    base = float(nz.min())
    ratios = []
    for s in np.unique(nz):
        f = Fraction(float(s / base)).limit_denominator(max_den)
        if abs(float(f) - s / base) > tol * max(1.0, s / base):
            return zero
        ratios.append(f)
    g = _gcd_fraction(ratios)
    m = Fraction(base).limit_denominator(max_den) * g
    if abs(float(m) - base * float(g)) > tol * max(1.0, base):
        # base itself is not a short fraction; keep the exact float-derived modulus
        m = Fraction(base * float(g))
    return SpectrumConstraint("lattice", 1 / m, vertical)


# -- transversal --------------------------------------------------------------------

def sample_transversal(rng: np.random.Generator, level: int = 5, params=NATURAL, kind: Optional[str] = None,
                       margin: float = 0.25) -> TilingWindow:
    """Random supertile type and a random anchor tile in the central part of it."""
    kind = kind or ("A" if rng.random() < 0.5 else "B")
    r = supertile(kind, level, params).canonical()
    bb = r.bounding_box()
    lo, hi = np.array(bb.lo), np.array(bb.hi)
    span = hi - lo
    inside = ((r.x >= lo[0] + margin * span[0]) & (r.x <= hi[0] - margin * span[0])
              & (r.y >= lo[1] + margin * span[1]) & (r.y <= hi[1] - margin * span[1]))
    pool = np.nonzero(inside)[0]
    if len(pool) == 0:
        pool = np.arange(len(r))
    idx = int(pool[rng.integers(len(pool))])
    prov = {"system": SYSTEM, "kind": kind, "level": level, "widths": [params.a, params.b], "height": params.c,
            "anchor_index": idx}
    return anchored_window(r.to_patch(), idx, prov)


def level_sizes(n: int, params=NATURAL, rule: DPVRule = EXAMPLE) -> tuple[np.ndarray, np.ndarray]:
    """Widths of the horizontal letters and heights of the vertical letters after n steps."""
    w = np.array([params.widths[x] for x in rule.h_letters], dtype=float)
    h = np.array([params.heights[x] for x in rule.v_letters], dtype=float)
    Mh, Mv = rule.h_matrix().astype(float), rule.v_matrix().astype(float)
    for _ in range(n):
        w = w @ Mh
        h = h @ Mv
    return w, h


def supertile_region(kind: str, n: int, box: Box, params=NATURAL, rule: DPVRule = EXAMPLE) -> RectPatch:
    """Tiles of the n-supertile (lower-left at the origin) whose interiors meet ``box``.

    Descends level by level, keeping only sub-supertiles that meet the box,
    so the cost scales with the box rather than with the supertile.
    """
    tb = _tables(rule)
    templates = _facet_templates(rule)
    H = len(rule.h_letters)
    blo, bhi = np.array(box.lo), np.array(box.hi)
    types = np.array([rule.type_index(kind)])
    pos = np.zeros((1, 2))
    for level in range(n, 0, -1):
        w, h = level_sizes(level - 1, params, rule)
        new_t, new_p = [], []
        for t, (ts, dp, dq) in enumerate(templates):
            sel = types == t
            if not sel.any():
                continue
            off = np.stack([dp @ w, dq @ h], axis=1)
            p = (pos[sel][:, None, :] + off[None]).reshape(-1, 2)
            new_p.append(p)
            new_t.append(np.tile(ts, int(sel.sum())))
        types = np.concatenate(new_t)
        pos = np.concatenate(new_p)
        size = np.stack([w[tb.type_h[types]], h[tb.type_v[types]]], axis=1)
        keep = np.all((pos < bhi) & (pos + size > blo), axis=1)
        types, pos = types[keep], pos[keep]
    w, h = level_sizes(0, params, rule)
    return RectPatch(types, pos[:, 0].copy(), pos[:, 1].copy(), w[tb.type_h[types]], h[tb.type_v[types]],
                     rule.type_names)
