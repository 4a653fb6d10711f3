"""Tiles, patches and finite tiling windows.

Supports are axis-aligned boxes in R^d (d = 1, 2, 3). A tile is a labelled
box with a control point; a patch is a finite, connected, interior-disjoint
union of tiles; a :class:`TilingWindow` is a patch together with a box it is
known to cover, standing in for an infinite tiling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

TAU_GEOM = 1e-9


class OverlapError(ValueError):
    pass


class DisconnectedError(ValueError):
    pass


class InsufficientWindow(ValueError):
    """The window does not contain enough of the tiling to certify a value."""


class SizeLimit(RuntimeError):
    pass


class OutOfRange(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class Label(NamedTuple):
    system: str
    value: Any


def _as_point(x) -> tuple[float, ...]:
    if np.isscalar(x):
        return (float(x),)
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo, hi = _as_point(self.lo), _as_point(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or not 1 <= len(lo) <= 3:
            raise ValueError(f"bad box dimensions {lo} {hi}")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("box coordinates must be finite")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"box has empty interior: {lo} {hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def volume(self) -> float:
        return math.prod(self.widths)

    def translate(self, x) -> "Box":
        x = _as_point(x)
        return Box(tuple(l + v for l, v in zip(self.lo, x)), tuple(h + v for h, v in zip(self.hi, x)))

    def contains_point(self, p, tol: float = 0.0) -> bool:
        p = _as_point(p)
        return all(l - tol <= v <= h + tol for l, v, h in zip(self.lo, p, self.hi))

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        return all(l - tol <= ol and oh <= h + tol
                   for l, h, ol, oh in zip(self.lo, self.hi, other.lo, other.hi))

    def distance_to_point(self, p) -> float:
        """Euclidean distance from ``p`` to the closed box."""
        p = _as_point(p)
        return math.sqrt(sum(max(l - v, 0.0, v - h) ** 2 for l, v, h in zip(self.lo, p, self.hi)))

    def inner_radius(self, p) -> float:
        """Radius of the largest ball about ``p`` inside the box (negative if outside)."""
        p = _as_point(p)
        return min(min(v - l, h - v) for l, v, h in zip(self.lo, p, self.hi))


@dataclass(frozen=True)
class Tile:
    label: Label
    support: Box
    control: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "control", _as_point(self.control))
        if len(self.control) != self.support.dim:
            raise ValueError("control point dimension differs from support")
        if not self.support.contains_point(self.control, TAU_GEOM):
            raise ValueError("control point must lie in the closed support")


@dataclass(frozen=True)
class Patch:
    """Ordered collection of tiles; build through :func:`validate_patch`."""

    tiles: tuple[Tile, ...]

    def __len__(self):
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    @property
    def dim(self) -> int:
        return self.tiles[0].support.dim

    @property
    def system(self) -> str:
        return self.tiles[0].label.system

    @cached_property
    def lo(self) -> np.ndarray:
        return np.array([t.support.lo for t in self.tiles], dtype=float)

    @cached_property
    def hi(self) -> np.ndarray:
        return np.array([t.support.hi for t in self.tiles], dtype=float)

    @cached_property
    def controls(self) -> np.ndarray:
        return np.array([t.control for t in self.tiles], dtype=float)

    @cached_property
    def labels(self) -> list:
        return [t.label.value for t in self.tiles]

    def bounding_box(self) -> Box:
        return Box(tuple(self.lo.min(axis=0)), tuple(self.hi.max(axis=0)))

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo, axis=1).sum())


@dataclass(frozen=True)
class TilingWindow:
    patch: Patch
    window: Box
    provenance: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not covers(self.patch, self.window):
            raise ValueError("window is not covered by the patch")


def sort_tiles(tiles: Sequence[Tile]) -> tuple[Tile, ...]:
    return tuple(sorted(tiles, key=lambda t: t.control))


def make_patch(tiles: Sequence[Tile], validate: bool = True, tau: float = TAU_GEOM) -> Patch:
    if validate:
        return validate_patch(tiles, tau)
    return Patch(sort_tiles(tiles))


def validate_patch(tiles: Sequence[Tile], tau: float = TAU_GEOM) -> Patch:
    """Check interiors are disjoint and the union connected; return the sorted Patch."""
    tiles = sort_tiles(tiles)
    if not tiles:
        raise ValueError("a patch needs at least one tile")
    dims = {t.support.dim for t in tiles}
    if len(dims) != 1:
        raise ValueError("mixed tile dimensions")
    lo = np.array([t.support.lo for t in tiles])
    hi = np.array([t.support.hi for t in tiles])
    _check_boxes(lo, hi, tau)
    return Patch(tiles)


def _check_boxes(lo: np.ndarray, hi: np.ndarray, tau: float) -> None:
    """Sweep along axis 0; raise on overlap deeper than tau or on a disconnected union."""
    n = len(lo)
    order = np.argsort(lo[:, 0], kind="stable")
    lo, hi = lo[order], hi[order]
    ends = np.searchsorted(lo[:, 0], hi[:, 0] + tau, side="right")
    rows, cols = [], []
    for i in range(n):
        j0, j1 = i + 1, ends[i]
        if j1 <= j0:
            continue
        ov = np.minimum(hi[i], hi[j0:j1]) - np.maximum(lo[i], lo[j0:j1])
        if np.any(np.all(ov > tau, axis=1)):
            j = j0 + int(np.argmax(np.all(ov > tau, axis=1)))
            raise OverlapError(f"tiles overlap: {lo[i]}-{hi[i]} and {lo[j]}-{hi[j]}")
        touch = np.nonzero(np.all(ov >= -tau, axis=1))[0] + j0
        rows.extend([i] * len(touch))
        cols.extend(touch.tolist())
    if n > 1:
        g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(g, directed=False)
        if ncomp != 1:
            raise DisconnectedError(f"patch splits into {ncomp} components")


def covers(patch: Patch, box: Box, tau: float = TAU_GEOM) -> bool:
    """True when the tiles' supports cover ``box`` up to tau (interior-disjoint tiles assumed)."""
    lo = np.maximum(patch.lo, box.lo)
    hi = np.minimum(patch.hi, box.hi)
    inter = np.clip(hi - lo, 0.0, None).prod(axis=1).sum()
    return inter >= box.volume * (1 - 1e-12) - tau


def translate(obj, x):
    """Shift supports and control points by ``+x``; labels are unchanged."""
    if isinstance(obj, Tile):
        x = _as_point(x)
        return Tile(obj.label, obj.support.translate(x), tuple(c + v for c, v in zip(obj.control, x)))
    if isinstance(obj, Patch):
        return Patch(tuple(translate(t, x) for t in obj.tiles))
    if isinstance(obj, TilingWindow):
        prov = dict(obj.provenance)
        shift = _as_point(x)
        old = prov.get("anchor_offset", (0.0,) * len(shift))
        prov["anchor_offset"] = tuple(float(a) + s for a, s in zip(_as_point(old), shift))
        return TilingWindow(translate(obj.patch, x), obj.window.translate(x), prov)
    if isinstance(obj, Box):
        return obj.translate(x)
    raise TypeError(f"cannot translate {type(obj).__name__}")


def _ball_volume(j: int) -> float:
    return math.pi ** (j / 2) / math.gamma(j / 2 + 1)


def van_hove_ratio(support: Box, r: float) -> float:
    """Vol of the r-neighbourhood of the boundary of a box, over the box volume.

    Outside part by the Steiner formula (elementary symmetric polynomials of
    the side lengths), inside part as the box minus its r-erosion.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    s = support.widths
    d = len(s)
    e = [1.0] + [0.0] * d
    for w in s:
        for k in range(d, 0, -1):
            e[k] += e[k - 1] * w
    outer = sum(e[d - j] * _ball_volume(j) * r ** j for j in range(1, d + 1))
    inner = support.volume - math.prod(max(w - 2 * r, 0.0) for w in s)
    return (outer + inner) / support.volume


def transversal_sample(system: str, count: int, seed: int, **params) -> list[TilingWindow]:
    """Windows with a tile control point at the origin, drawn from a random supertile."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    if system == "subst1d":
        from .subst1d import sample_transversal
    elif system == "dpv":
        from .dpv import sample_transversal
    elif system == "solenoid":
        from .solenoid import sample_transversal
    else:
        raise ValueError(f"unknown system {system!r}")
    return [sample_transversal(rng, **params) for _ in range(count)]


def anchored_window(patch: Patch, index: int, provenance: dict, validate: bool = False) -> TilingWindow:
    """Translate ``patch`` so tile ``index`` has its control point at the origin."""
    c = patch.tiles[index].control
    shift = tuple(-v for v in c)
    moved = Patch(tuple(translate(t, shift) for t in patch.tiles))
    if validate:
        moved = validate_patch(moved.tiles)
    prov = dict(provenance)
    prov["anchor_offset"] = shift
    return TilingWindow(moved, moved.bounding_box(), prov)
