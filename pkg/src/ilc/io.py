"""Serialization and export: JSON patches, CSV tables, SVG figures, OBJ surfaces.

Every writer is deterministic: fixed field order, fixed number formatting, so
the same input gives byte-identical output.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .core import Box, Label, Patch, SizeLimit, Tile, TilingWindow, make_patch


class ValidationError(ValueError):
    pass


def atomic_write(path: str, data: str | bytes) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ilc-", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- JSON ----------------------------------------------------------------------

def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"non-finite number {x}")
    return "%.17g" % x


def _enc(v: Any) -> str:
    """Compact JSON with 17-significant-digit floats; dict order is preserved."""
    if v is None or isinstance(v, (bool, np.bool_)):
        return json.dumps(None if v is None else bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _num(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_enc(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ",".join(_enc(x) for x in v) + "]"
    raise ValidationError(f"cannot serialize {type(v).__name__}")


def _label_out(lab: Label):
    return {"system": lab.system, "value": lab.value}


def _label_in(d) -> Label:
    if not isinstance(d, dict) or "system" not in d or "value" not in d:
        raise ValidationError(f"bad label {d!r}")
    v = d["value"]
    if d["system"] == "subst1d":
        v = float(v)
    return Label(d["system"], v)


def patch_to_json(obj: Patch | TilingWindow) -> str:
    if isinstance(obj, TilingWindow):
        patch, window, prov = obj.patch, obj.window, obj.provenance
    else:
        patch, window, prov = obj, None, {}
    if len(patch) == 0:
        raise ValidationError("empty patch")
    tiles = [{"label": _label_out(t.label),
              "support": [list(t.support.lo), list(t.support.hi)],
              "control": list(t.control)} for t in patch]
    if window is None:
        lo = np.min([t.support.lo for t in patch], axis=0)
        hi = np.max([t.support.hi for t in patch], axis=0)
        window_v = [lo.tolist(), hi.tolist()]
    else:
        window_v = [list(window.lo), list(window.hi)]
    doc = {"tiles": tiles, "window": window_v, "provenance": dict(prov)}
    return _enc(doc) + "\n"


def patch_from_json(text: str, validate: bool = True) -> TilingWindow:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict) or "tiles" not in doc:
        raise ValidationError("field 'tiles' missing")
    tiles = []
    for i, t in enumerate(doc["tiles"]):
        try:
            lo, hi = t["support"]
            tiles.append(Tile(_label_in(t["label"]), Box(tuple(lo), tuple(hi)), tuple(t["control"])))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"tiles[{i}]: {e}") from None
    if not tiles:
        raise ValidationError("empty patch")
    try:
        patch = make_patch(tiles, validate=validate)
    except ValueError as e:
        raise ValidationError(str(e)) from None
    w = doc.get("window")
    window = Box(tuple(w[0]), tuple(w[1])) if w else None
    prov = doc.get("provenance") or {}
    if window is None:
        lo = np.min([t.support.lo for t in tiles], axis=0)
        hi = np.max([t.support.hi for t in tiles], axis=0)
        window = Box(tuple(lo), tuple(hi))
    return TilingWindow(patch, window, prov)


# -- CSV -------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValidationError(f"non-finite number {v}")
        return repr(float(v))
    s = str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def to_csv(columns: Sequence[str], rows: Iterable[Sequence], config: Optional[dict] = None) -> str:
    """CSV text; the first line echoes the run configuration as a comment."""
    out = []
    if config is not None:
        out.append("# config: " + _enc(config))
    out.append(",".join(columns))
    for r in rows:
        if len(r) != len(columns):
            raise ValidationError("row width differs from header")
        out.append(",".join(_cell(v) for v in r))
    return "\n".join(out) + "\n"


# -- SVG -------------------------------------------------------------------------

SVG_LIMIT = 200_000

# a few anchor colours, linearly interpolated (dark blue -> green -> yellow)
_CMAP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], float)


def colormap(t: float) -> str:
    t = min(max(float(t), 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(t), len(_CMAP) - 2)
    c = _CMAP[i] + (t - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def _f(x: float) -> str:
    s = "%.6f" % x
    return "0.000000" if s == "-0.000000" else s


_TYPE_FILL = ("#d9d9d9", "#7f9cc4", "#c48f7f", "#9cc47f")


def render_svg(obj, style: Optional[dict] = None, fault_lines: Sequence[float] = ()) -> str:
    """SVG of a 1D length-coded bar (subst1d) or of DPV rectangles.

    ``obj`` is a VarSupertile, a 1D subst1d Patch, or a dpv.RectPatch.
    """
    from . import dpv, subst1d

    style = dict(style or {})
    if isinstance(obj, subst1d.VarSupertile):
        lefts, lengths = obj.lefts, obj.lengths
        return _svg_bar(lefts, lengths, style)
    if isinstance(obj, dpv.RectPatch):
        return _svg_rects(obj, style, fault_lines)
    if isinstance(obj, Patch):
        if len(obj) == 0:
            raise ValidationError("empty patch")
        if obj.dim == 1:
            lo = np.array([t.support.lo[0] for t in obj])
            hi = np.array([t.support.hi[0] for t in obj])
            return _svg_bar(lo, hi - lo, style)
        return _svg_rects(dpv.RectPatch.from_patch(obj), style, fault_lines)
    raise ValidationError(f"cannot render {type(obj).__name__}")


def _svg_bar(lefts, lengths, style) -> str:
    n = len(lengths)
    if n == 0:
        raise ValidationError("empty patch")
    if n > SVG_LIMIT:
        raise SizeLimit(f"{n} tiles exceed the SVG limit {SVG_LIMIT}")
    width = float(style.get("width", 1000.0))
    height = float(style.get("height", 40.0))
    x0 = float(lefts[0])
    total = float(lefts[-1] + lengths[-1] - x0)
    s = width / total
    lo, hi = style.get("range", (1.0, 3.0))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
           f'viewBox="0 0 {_f(width)} {_f(height)}">']
    for l, ell in zip(lefts, lengths):
        c = colormap((ell - lo) / (hi - lo))
        out.append(f'<rect x="{_f((l - x0) * s)}" y="0.000000" width="{_f(ell * s)}" '
                   f'height="{_f(height)}" fill="{c}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _svg_rects(r, style, fault_lines) -> str:
    n = len(r)
    if n == 0:
        raise ValidationError("empty patch")
    if n > SVG_LIMIT:
        raise SizeLimit(f"{n} tiles exceed the SVG limit {SVG_LIMIT}")
    scale = float(style.get("scale", 10.0))
    bb = r.bounding_box()
    (x0, y0), (x1, y1) = bb.lo, bb.hi
    W, H = (x1 - x0) * scale, (y1 - y0) * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(W)}" height="{_f(H)}" '
           f'viewBox="0 0 {_f(W)} {_f(H)}">']
    for t, x, y, w, h in zip(r.types, r.x, r.y, r.w, r.h):
        # flip y so that row 0 is drawn at the bottom
        out.append(f'<rect x="{_f((x - x0) * scale)}" y="{_f((y1 - y - h) * scale)}" '
                   f'width="{_f(w * scale)}" height="{_f(h * scale)}" '
                   f'fill="{_TYPE_FILL[int(t) % len(_TYPE_FILL)]}" stroke="#000000" stroke-width="0.5"/>')
    for fy in fault_lines:
        yy = (y1 - fy) * scale
        out.append(f'<line x1="0.000000" y1="{_f(yy)}" x2="{_f(W)}" y2="{_f(yy)}" '
                   f'stroke="#d62728" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- OBJ ------------------------------------------------------------------------

def surface_to_obj(surface) -> str:
    """Wavefront OBJ of a stepped surface: shared integer vertices, one quad per facet."""
    quads = surface.quads()
    if len(quads) == 0:
        raise ValidationError("empty surface")
    flat = quads.reshape(-1, quads.shape[-1])
    verts, inv = np.unique(flat, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(len(quads), 4) + 1
    out = [f"# facets {len(quads)}"]
    out += ["v " + " ".join(str(int(c)) for c in v[:3]) for v in verts]
    out += ["f " + " ".join(str(int(i)) for i in q) for q in inv]
    return "\n".join(out) + "\n"
