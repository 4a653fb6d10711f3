"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 budget or window insufficiency.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import complexity, dpv, io, measures, metrics, solenoid, subst1d
from .core import DegenerateInput, InsufficientWindow, OutOfRange, SizeLimit

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass
class RunConfig:
    system: str
    operation: str
    emit: str
    seed: Optional[float] = None
    params: dict = field(default_factory=dict)
    budget: Optional[int] = None

    def echo(self) -> dict:
        return asdict(self)


def _rng(cfg: RunConfig) -> np.random.Generator:
    s = 0 if cfg.seed is None else cfg.seed
    if s != int(s) or s < 0:
        raise ConfigError("seed", "must be a nonnegative integer for this command")
    return np.random.default_rng(int(s))


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        io.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _check_emit(cfg: RunConfig, allowed) -> None:
    if cfg.emit not in allowed:
        raise ConfigError("emit", f"{cfg.emit!r} not one of {', '.join(allowed)}")


# -- subcommand handlers ------------------------------------------------------------

def run_subst1d(cfg: RunConfig) -> str:
    _check_emit(cfg, ("json", "csv", "svg"))
    x = 1.5 if cfg.seed is None else cfg.seed
    st = subst1d.iterate(x, cfg.params["n"])
    if cfg.emit == "json":
        return io.patch_to_json(st.to_window())
    if cfg.emit == "svg":
        return io.render_svg(st)
    rows = [(float(l), float(e)) for l, e in zip(st.lefts, st.lengths)]
    return io.to_csv(["left", "length"], rows, cfg.echo())


def _dpv_params(p: dict) -> dpv.DPVParams:
    w = p.get("widths")
    if w is None:
        return dpv.NATURAL
    a, b = w
    c = p.get("height") or 1.0
    if a <= 0 or b <= 0 or c <= 0:
        raise ConfigError("widths", "tile sizes must be positive")
    return dpv.DPVParams(a, b, c)


def run_dpv(cfg: RunConfig) -> str:
    p = cfg.params
    params = _dpv_params(p)
    kind, n = p.get("kind", "A"), p["n"]
    if kind not in ("A", "B"):
        raise ConfigError("kind", "must be A or B")
    if cfg.operation == "surface":
        _check_emit(cfg, ("obj", "json"))
        s = dpv.build_stepped_surface(kind, n)
        if cfg.emit == "obj":
            return io.surface_to_obj(s)
        doc = {"types": [s.rule.type_names[t] for t in s.types], "corners": s.corners.tolist()}
        return io._enc(doc) + "\n"
    r = dpv.supertile(kind, n, params)
    if cfg.operation == "faults":
        _check_emit(cfg, ("csv",))
        rep = dpv.find_fault_lines(r)
        rows = [(float(y), float(o)) for y, offs in zip(rep.lines, rep.offsets) for o in offs]
        return io.to_csv(["y", "offset"], rows, cfg.echo())
    _check_emit(cfg, ("svg", "json"))
    if cfg.emit == "svg":
        lines = dpv.find_fault_lines(r).lines if p.get("faults") else ()
        return io.render_svg(r, fault_lines=lines)
    return io.patch_to_json(r.to_window())


def run_solenoid(cfg: RunConfig) -> str:
    p = cfg.params
    spec = solenoid.spec_by_name(p.get("spec", "one-point"))
    if cfg.operation == "sweep":
        _check_emit(cfg, ("csv",))
        res = solenoid.transition_sweep(p["max_N"], p["max_label"], spec)
        rows = [(n, N, m, k, f, b, int(f != b)) for n, N, m, k, f, b in res.rows]
        text = io.to_csv(["n", "N", "m", "k", "formula", "brute", "mismatch"], rows, cfg.echo())
        return text + f"# mismatches: {res.mismatches}\n"
    if cfg.operation == "probe":
        _check_emit(cfg, ("csv", "json"))
        w = solenoid.expansivity_probe(spec, p["delta"], seed=int(_rng(cfg).integers(2 ** 31)))
        row = (p["delta"], "" if w is None else w.N, "none" if w is None else "witness")
        if cfg.emit == "json":
            return io._enc({"delta": row[0], "N": None if w is None else w.N, "result": row[2]}) + "\n"
        return io.to_csv(["delta", "N", "result"], [row], cfg.echo())
    _check_emit(cfg, ("csv", "json"))
    head = p["head"]
    if isinstance(head, str) and head.lstrip("-").isdigit():
        head = int(head)
    st = solenoid.build_supertile(p["k"], head, spec)
    if cfg.emit == "json":
        return io.patch_to_json(st.to_window())
    return io.to_csv(["position", "label"], list(enumerate(st.labels)), cfg.echo())


def _read_window(path: str):
    try:
        with open(path) as fh:
            return io.patch_from_json(fh.read())
    except OSError as e:
        raise ConfigError("file", str(e)) from None


def run_dist(cfg: RunConfig) -> str:
    p = cfg.params
    w1, w2 = _read_window(p["first"]), _read_window(p["second"])
    kind = cfg.operation
    perm = None
    # tiling distances are taken about the centre of the first window
    center = 0.5 * (np.array(w1.window.lo) + np.array(w1.window.hi))
    if kind == "tile":
        if len(w1.patch) != 1 or len(w2.patch) != 1:
            raise ConfigError("kind", "tile distance needs single-tile files")
        d = metrics.tile_distance(w1.patch.tiles[0], w2.patch.tiles[0])
    elif kind == "patch":
        d, perm = metrics.patch_distance(w1.patch, w2.patch, return_bijection=True)
    elif kind == "tiling":
        d = metrics.tiling_distance(w1, w2, tol=p["tol"], center=center)
    else:
        L = p.get("L")
        if L is None:
            raise ConfigError("L", "required for --kind dL")
        grid = p.get("grid") or 0.25 * max(metrics.tiling_distance(w1, w2, tol=p["tol"], center=center), 1e-3)
        d = metrics.dL_distance(w1, w2, L, grid, tol=p["tol"]).value
    out = "%.17g\n" % d
    if perm is not None:
        out += " ".join(str(int(i)) for i in perm) + "\n"
    return out


def _family(system: str, path: str) -> measures.TrimSet:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("family", str(e)) from None
    doc = json.loads(text)
    if "lengths" in doc:
        if system != "subst1d":
            raise ConfigError("family", "a length family needs --system subst1d")
        lo, hi = doc["lengths"]
        return measures.length_family(lo, hi)
    w = io.patch_from_json(text)
    if w.patch.system != system:
        raise ConfigError("family", f"patch system {w.patch.system} differs from --system {system}")
    return measures.TrimSet(w.patch, float(doc.get("eps", 0.0)), int(doc.get("anchor", 0)))


def run_freq(cfg: RunConfig) -> str:
    _check_emit(cfg, ("csv",))
    p = cfg.params
    I = _family(cfg.system, p["family"])
    n = p["n"]
    if p["route"] == "transition":
        rho = {"subst1d": lambda: measures.Subst1dMeasure(),
               "dpv": lambda: measures.DPVMeasure(),
               "solenoid": lambda: measures.SolenoidMeasure()}[cfg.system]()
        est = measures.freq_estimate_transition(I, rho, n)
        rows = [(lvl, v) for lvl, v in zip(est.levels, est.values)]
        return io.to_csv(["level", "value"], rows, cfg.echo()) + f"# converged: {est.converged}\n"
    if cfg.system == "subst1d":
        W = subst1d.iterate(1.5 if cfg.seed is None else cfg.seed, n).to_window()
    elif cfg.system == "dpv":
        W = dpv.supertile("A", n).to_window()
    else:
        W = solenoid.build_supertile(n, "lim").to_window()
    est = measures.freq_estimate_ergodic(I, W)
    return io.to_csv(["value", "count", "volume"], [(est.value, est.count, est.volume)], cfg.echo())


def _sampler(system: str, L_max: float, eps: float):
    if system == "subst1d":
        return complexity.Subst1dSampler(L_max, eps)
    if system == "dpv":
        return complexity.DPVSampler(L_max, eps)
    if system == "solenoid":
        return complexity.SolenoidSampler(L_max, eps)
    if system == "periodic":
        return complexity.PeriodicSampler()
    return complexity.SturmianSampler()


def run_complexity(cfg: RunConfig) -> str:
    _check_emit(cfg, ("csv",))
    p = cfg.params
    eps, Ls = p["eps"], p["L"]
    if not 0 < eps < 1:
        raise ConfigError("eps", "must lie in (0, 1)")
    seed = int(_rng(cfg).integers(2 ** 31)) if cfg.seed is not None else 0
    S = _sampler(cfg.system, max(Ls), eps)
    est = complexity.estimate_curve(eps, Ls, S, cfg.budget, seed)
    rows = [(e.eps, e.L, e.size, e.semantics, e.seed) for e in est]
    text = io.to_csv(["eps", "L", "sepset_size", "semantics", "seed"], rows, cfg.echo())
    if len(Ls) >= 5 and max(Ls) >= 10 * min(Ls):
        fit = complexity.fit_scaling(est)
        text += f"# alpha: {fit.alpha:.6f} ci: [{fit.ci[0]:.6f}, {fit.ci[1]:.6f}]\n"
    if any(e.saturated for e in est):
        text += "# warning: separated set reached the budget; counts are budget-limited\n"
    return text


HANDLERS = {"subst1d": run_subst1d, "dpv": run_dpv, "solenoid": run_solenoid,
            "dist": run_dist, "freq": run_freq, "complexity": run_complexity}


def run(cfg: RunConfig, out: Optional[str] = None) -> int:
    _emit(HANDLERS[cfg.system if cfg.operation not in ("freq", "complexity") else cfg.operation](cfg), out)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------

def _floats(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=float, default=argparse.SUPPRESS,
                   help="seed length for subst1d, RNG seed elsewhere")
    g.add_argument("--out", default=argparse.SUPPRESS, help="write the artifact here instead of stdout")
    g.add_argument("--format", dest="emit", default=argparse.SUPPRESS, help="alias of --emit")
    g.add_argument("--emit", default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="ilc", parents=[g], description="Tilings with infinite local complexity.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subst1d", parents=[g], help="variable-length 1D substitution")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("dpv", parents=[g], help="DPV rectangle substitution")
    p.add_argument("action", nargs="?", default="supertile", choices=("supertile", "surface", "faults"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", default="A")
    p.add_argument("--widths", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--height", type=float)
    p.add_argument("--faults", action="store_true", help="overlay fault lines on the SVG")

    p = sub.add_parser("solenoid", parents=[g], help="solenoid tilings")
    p.add_argument("action", choices=("supertile", "sweep", "probe"))
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--head", default="lim")
    p.add_argument("--max-N", dest="max_N", type=int, default=12)
    p.add_argument("--max-label", dest="max_label", type=int, default=14)
    p.add_argument("--spec", default="one-point")
    p.add_argument("--delta", type=float, default=0.1)

    p = sub.add_parser("dist", parents=[g], help="distances between JSON patches")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--kind", required=True, choices=("tile", "patch", "tiling", "dL"))
    p.add_argument("--L", type=float)
    p.add_argument("--grid", type=float)
    p.add_argument("--tol", type=float, default=1e-3)

    p = sub.add_parser("freq", parents=[g], help="patch frequencies")
    p.add_argument("--system", required=True, choices=("subst1d", "dpv", "solenoid"))
    p.add_argument("--family", required=True, help="JSON file: {\"lengths\": [lo, hi]} or a patch")
    p.add_argument("--route", default="transition", choices=("ergodic", "transition"))
    p.add_argument("--n", type=int, default=8)

    p = sub.add_parser("complexity", parents=[g], help="separated-set complexity estimates")
    p.add_argument("--system", required=True, choices=("subst1d", "dpv", "solenoid", "periodic", "sturmian"))
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--L", type=_floats, default=[10.0, 20.0, 40.0, 80.0, 160.0])
    p.add_argument("--budget", type=int)
    return ap


_DEFAULT_EMIT = {"subst1d": "json", "dpv": "json", "solenoid": "csv", "dist": "text",
                 "freq": "csv", "complexity": "csv"}


def config_from_args(a: argparse.Namespace) -> RunConfig:
    d = vars(a).copy()
    cmd = d.pop("command")
    emit = d.pop("emit", None)
    seed = d.pop("seed", None)
    d.pop("out", None)
    if cmd == "dpv":
        op = d.pop("action")
        if emit is None:
            emit = {"surface": "obj", "faults": "csv"}.get(op, "json")
        return RunConfig("dpv", op, emit, seed, d)
    if cmd == "solenoid":
        return RunConfig("solenoid", d.pop("action"), emit or "csv", seed, d)
    if cmd == "dist":
        return RunConfig("dist", d.pop("kind"), emit or "text", seed, d)
    if cmd in ("freq", "complexity"):
        budget = d.pop("budget", None)
        if budget is None and cmd == "complexity":
            budget = complexity.default_budget()
        return RunConfig(d.pop("system"), cmd, emit or "csv", seed, d, budget)
    return RunConfig(cmd, cmd, emit or _DEFAULT_EMIT[cmd], seed, d)


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    out = getattr(a, "out", None)
    try:
        return run(config_from_args(a), out)
    except (SizeLimit, InsufficientWindow, complexity.BudgetExhausted) as e:
        print(f"ilc: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, io.ValidationError, OutOfRange, DegenerateInput, ValueError, KeyError) as e:
        print(f"ilc: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
