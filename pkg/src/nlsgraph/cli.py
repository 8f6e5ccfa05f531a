"""Command-line front end: presets, sweeps, curve tracing, reports, plots.

    nlsgraph <command> <config-or-preset> [-o DIR] [--threads N]

Configs are INI files (see presets/).  Numbers in CSV output use
NLSGRAPH_DIGITS significant digits (default 17).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import Determinant, trace_all
from .errors import NlsGraphError
from .index import spectral_index_report, vk_criterion
from .resolvent_lab import identity_suite
from .spectral import (
    dispersion_det,
    frame_intersection,
    graph_for,
    interval_matrix,
    shooting_nullity,
)
from .standing_wave import WaveParams, WaveProfile, integrate_profile, interval_wave

KINDS = ("star_wave", "interval_rotating", "interval_wave")
COMMANDS = ("wave", "sweep", "curves", "index", "vk", "verify")
DIGITS_ENV = "NLSGRAPH_DIGITS"
PRESET_ENV = "NLSGRAPH_PRESETS"


class ConfigError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def preset_dir() -> Path:
    if os.environ.get(PRESET_ENV):
        return Path(os.environ[PRESET_ENV])
    for base in (Path.cwd(), *Path(__file__).resolve().parents):
        if (base / "presets").is_dir():
            return base / "presets"
    return Path.cwd() / "presets"


def list_presets() -> dict:
    out = {}
    d = preset_dir()
    for path in sorted(d.glob("*.ini")) if d.is_dir() else []:
        cp = configparser.ConfigParser(inline_comment_prefixes=(";",))
        cp.read(path)
        out[path.stem] = cp.get("scenario", "description", fallback="")
    return out


def resolve_config(name) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    cand = preset_dir() / f"{name}.ini"
    if cand.is_file():
        return cand
    raise ConfigError("config_not_found", f"no config file or preset named {name!r}")


# ---------------------------------------------------------------- scenario


def _num(section, key) -> float:
    """Required float entry; a missing key raises KeyError."""
    return float(section[key])


@dataclass
class Scenario:
    kind: str
    params: dict
    window: tuple
    n_lambda: int
    n_t: int
    trace: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)
    seed: int = 0
    name: str = ""

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, name: str = "") -> "Scenario":
        try:
            kind = cp.get("scenario", "kind")
            if kind not in KINDS:
                raise ConfigError("config_invalid", f"kind must be one of {KINDS}")
            if kind == "star_wave":
                w = cp["wave"]
                params = dict(
                    beta=_num(w, "beta"), p=_num(w, "p"), center_value=_num(w, "center_value"),
                    slopes=tuple(float(x) for x in w["slopes"].split(",")), alpha=w.getfloat("alpha", 0.0),
                )
            elif kind == "interval_rotating":
                w = cp["interval"]
                params = dict(length=_num(w, "length"), both_ends=w.getboolean("both_ends", False))
            else:
                w = cp["interval"]
                params = dict(beta=_num(w, "beta"), p=_num(w, "p"), half_period=_num(w, "half_period"),
                              both_ends=w.getboolean("both_ends", False))
            win = cp["window"]
            window = ((_num(win, "lambda_min"), _num(win, "lambda_max")),
                      (_num(win, "t_min"), _num(win, "t_max")))
            n_lambda, n_t = int(win["n_lambda"]), int(win["n_t"])
            tr = cp["trace"] if cp.has_section("trace") else {}
            trace = dict(lines=int(tr.get("lines", 5)), scan=int(tr.get("scan", 80)), step=float(tr.get("step", 0.02)))
            ix = cp["index"] if cp.has_section("index") else {}
            index = dict(eps0=float(ix.get("eps0", 0.02)), delta=float(ix.get("delta", 1e-3)),
                         n_scan=int(ix.get("n_scan", 400)))
            seed = cp.getint("verify", "seed", fallback=0)
        except (configparser.Error, KeyError, ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("config_invalid", str(exc)) from None
        flat = [*window[0], *window[1]]
        if not all(math.isfinite(x) for x in flat) or not (window[0][1] > window[0][0] and window[1][1] > window[1][0]):
            raise ConfigError("config_invalid", "window bounds must be finite and increasing")
        if n_lambda < 2 or n_t < 2:
            raise ConfigError("config_invalid", "resolutions must be at least 2")
        if window[1][0] <= 0:
            raise ConfigError("config_invalid", "t_min must be positive")
        return cls(kind, params, window, n_lambda, n_t, trace, index, seed, name)

    @classmethod
    def load(cls, name) -> "Scenario":
        path = resolve_config(name)
        cp = configparser.ConfigParser(inline_comment_prefixes=(";",))
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError("config_invalid", str(exc)) from None
        return cls.from_parser(cp, path.stem)

    def to_dict(self) -> dict:
        return dict(kind=self.kind, params=self.params, window=self.window, n_lambda=self.n_lambda,
                    n_t=self.n_t, trace=self.trace, index=self.index, seed=self.seed, name=self.name)

    @property
    def lambda_scale(self) -> float:
        return max(abs(self.window[0][0]), abs(self.window[0][1]))

    def profile(self) -> WaveProfile:
        p = self.params
        if self.kind == "star_wave":
            return integrate_profile(WaveParams(p["beta"], p["p"], p["center_value"], p["slopes"]), p["alpha"])
        if self.kind == "interval_rotating":
            return WaveProfile.flat([p["length"]], beta=0.0)
        return interval_wave(p["beta"], p["p"], p["half_period"])

    def determinant(self, profile=None):
        """(det(lam, t), intersect_dim(lam, t)) for this scenario."""
        prof = profile or self.profile()
        if self.kind == "star_wave":
            graph = graph_for(prof)
            return (lambda lam, t: dispersion_det(lam, t, prof, graph),
                    lambda lam, t: frame_intersection(lam, t, prof, graph))
        both = self.params["both_ends"]
        return (lambda lam, t: float(np.linalg.det(interval_matrix(lam, t, prof, both))),
                lambda lam, t: shooting_nullity(interval_matrix(lam, t, prof, both)))


# ---------------------------------------------------------------- output


def _digits() -> int:
    raw = os.environ.get(DIGITS_ENV, "17")
    try:
        d = int(raw)
    except ValueError:
        raise ConfigError("config_invalid", f"{DIGITS_ENV} must be an integer") from None
    if not 1 <= d <= 17:
        raise ConfigError("config_invalid", f"{DIGITS_ENV} must lie in [1, 17]")
    return d


def _fmt(x, digits) -> str:
    return format(float(x), f".{digits}g")


def write_csv(path, header, rows, digits):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) if isinstance(v, (int, np.integer)) else _fmt(v, digits) for v in row) + "\n")


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def svg_plot(path, series, xlim, ylim, xlabel="lambda", ylabel="t", title="", markers=False):
    """Polylines (or dots) on a fixed 640 x 480 viewbox with axis ticks.

    series is a list of (N, 2) arrays in data coordinates.
    """
    w, h, m = 640, 480, 60
    (x0, x1), (y0, y1) = xlim, ylim
    sx = lambda x: m + (x - x0) / (x1 - x0) * (w - 2 * m)
    sy = lambda y: h - m - (y - y0) / (y1 - y0) * (h - 2 * m)
    colors = ["#1f4e9c", "#b2182b", "#1b7837", "#762a83", "#e08214", "#01665e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="black"/>',
    ]
    for x in _ticks(x0, x1):
        px = sx(x)
        out.append(f'<line x1="{px:.2f}" y1="{h - m}" x2="{px:.2f}" y2="{h - m + 6}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{h - m + 20}" font-size="12" text-anchor="middle">{x:.4g}</text>')
    for y in _ticks(y0, y1):
        py = sy(y)
        out.append(f'<line x1="{m - 6}" y1="{py:.2f}" x2="{m}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{m - 10}" y="{py + 4:.2f}" font-size="12" text-anchor="end">{y:.4g}</text>')
    out.append(f'<text x="{w / 2}" y="{h - 15}" font-size="14" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{h / 2}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 18 {h / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{w / 2}" y="30" font-size="14" text-anchor="middle">{title}</text>')
    out.append(f'<clipPath id="plot"><rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}"/></clipPath>')
    for k, pts in enumerate(series):
        color = colors[k % len(colors)]
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if markers:
            for x, y in pts:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2" fill="{color}" clip-path="url(#plot)"/>')
        elif len(pts):
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5" '
                       f'clip-path="url(#plot)"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _mirror(pts):
    """D is even in lambda: the zero set is symmetric about lambda = 0."""
    m = pts.copy()
    m[:, 0] *= -1
    return m


# ---------------------------------------------------------------- commands

_WORKER = {}


def _worker_init(cfg):
    sc = Scenario(**cfg)
    _WORKER["fns"] = sc.determinant()


def _sweep_row(args):
    t, lams = args
    det, dim = _WORKER["fns"]
    return [(lam, t, det(lam, t), dim(lam, t)) for lam in lams]


def cmd_wave(sc, out, threads):
    prof = sc.profile()
    prof.to_json(out / "wave.json")
    return {"lengths": list(prof.lengths), "file": "wave.json"}


def cmd_sweep(sc, out, threads):
    (l0, l1), (t0, t1) = sc.window
    lams = [float(x) for x in np.linspace(l0, l1, sc.n_lambda)]
    ts = [float(x) for x in np.linspace(t0, t1, sc.n_t)]
    jobs = [(t, lams) for t in ts]
    if threads > 1:
        with ProcessPoolExecutor(threads, initializer=_worker_init, initargs=(sc.to_dict(),)) as ex:
            rows = [r for chunk in ex.map(_sweep_row, jobs) for r in chunk]
    else:
        _worker_init(sc.to_dict())
        rows = [r for job in jobs for r in _sweep_row(job)]
    digits = _digits()
    write_csv(out / "sweep.csv", ("lambda", "t", "det", "intersect_dim"), rows, digits)
    # zero-set cells: sign change to the right or above
    grid = np.array([r[2] for r in rows]).reshape(len(ts), len(lams))
    marks = []
    for i in range(len(ts)):
        for j in range(len(lams)):
            if j + 1 < len(lams) and grid[i, j] * grid[i, j + 1] < 0:
                marks.append((0.5 * (lams[j] + lams[j + 1]), ts[i]))
            if i + 1 < len(ts) and grid[i, j] * grid[i + 1, j] < 0:
                marks.append((lams[j], 0.5 * (ts[i] + ts[i + 1])))
    svg_plot(out / "sweep.svg", [np.array(marks)], (l0, l1), (t0, t1), markers=True,
             title=f"{sc.name}: sign changes of D")
    return {"file": "sweep.csv", "points": len(rows), "sign_changes": len(marks)}


def cmd_curves(sc, out, threads):
    det_fn, _ = sc.determinant()
    det = Determinant(None, None, det_fn)
    (l0, l1), (t0, t1) = sc.window
    scale = sc.lambda_scale
    # a small margin below lambda_min lets curves through lambda = 0 be traced across it
    window = ((l0 - 0.05 * scale, l1), (t0, t1))
    curves = trace_all(det, window, scale, n_lines=sc.trace["lines"], n_scan=sc.trace["scan"],
                       step=sc.trace["step"])
    digits = _digits()
    for stale in sorted(out.glob("curve_*.csv")):
        stale.unlink()
    summary = []
    for k, c in enumerate(curves):
        name = f"curve_{k:03d}.csv"
        write_csv(out / name, ("lambda", "t", "residual"),
                  [(l, t, r) for (l, t), r in zip(c.points, c.residuals)], digits)
        summary.append({"file": name, "points": len(c.points), "status": c.status, "seed": list(c.seed)})
    series = [c.points for c in curves]
    lo = l0
    if l0 >= 0:
        series = series + [_mirror(c.points) for c in curves]
        lo = -l1
    svg_plot(out / "curves.svg", series, (lo, l1), (t0, t1), title=f"{sc.name}: eigenvalue curves")
    return {"curves": summary, "plot": "curves.svg"}


def _require_star(sc, what):
    if sc.kind != "star_wave":
        raise ConfigError("unsupported_for_kind", f"{what} needs a star_wave scenario, got {sc.kind}")


def cmd_index(sc, out, threads):
    _require_star(sc, "index")
    prof = sc.profile()
    rep = spectral_index_report(prof, graph_for(prof), eps0=sc.index["eps0"], delta=sc.index["delta"],
                                n_scan=sc.index["n_scan"])
    data = rep.to_json_dict()
    (out / "index.json").write_text(json.dumps(data, indent=1) + "\n")
    return data


def cmd_vk(sc, out, threads):
    _require_star(sc, "vk")
    prof = sc.profile()
    data = vk_criterion(prof, graph_for(prof), eps0=sc.index["eps0"], delta=sc.index["delta"],
                        n_scan=sc.index["n_scan"])
    (out / "vk.json").write_text(json.dumps(data, indent=1) + "\n")
    return data


def cmd_verify(sc, out, threads):
    seed = sc.seed if sc is not None else 0
    rows = identity_suite(seed=seed)
    data = {"seed": seed, "all_pass": all(r["pass"] for r in rows), "checks": rows}
    (out / "verify.json").write_text(json.dumps(data, indent=1) + "\n")
    return data


HANDLERS = {"wave": cmd_wave, "sweep": cmd_sweep, "curves": cmd_curves, "index": cmd_index,
            "vk": cmd_vk, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    presets = list_presets()
    epilog = "presets:\n" + "\n".join(f"  {k:12s} {v}" for k, v in presets.items())
    epilog += f"\n\nenvironment:\n  {DIGITS_ENV}  significant digits in CSV output (default 17)"
    epilog += f"\n  {PRESET_ENV}  directory searched for presets"
    ap = argparse.ArgumentParser(
        prog="nlsgraph", description="Eigenvalue curves, crossing forms and index counts for linearized NLS on star graphs.",
        epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", nargs="?", help="INI file or preset name (optional for verify)")
    ap.add_argument("-o", "--output", default="out", help="output directory (default: out)")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker processes for sweeps (default: available CPUs)")
    return ap


def _fail(code, status, message, **extra):
    sys.stderr.write(json.dumps({"code": code, "message": message, **extra}) + "\n")
    return status


def run(command, config, output, threads=1) -> int:
    try:
        sc = Scenario.load(config) if config is not None else None
        if sc is None and command != "verify":
            raise ConfigError("config_not_found", f"{command} needs a config file or preset")
        if threads < 1:
            raise ConfigError("config_invalid", "--threads must be positive")
        _digits()
        out = Path(output)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError("output_not_writable", str(exc)) from None
        result = HANDLERS[command](sc, out, threads)
    except ConfigError as exc:
        return _fail(exc.code, 2, str(exc))
    except (NlsGraphError, np.linalg.LinAlgError, ArithmeticError) as exc:
        return _fail("computation_error", 1, str(exc), error=type(exc).__name__)
    print(json.dumps(result, indent=1))
    if command == "verify" and not result["all_pass"]:
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.output, args.threads)


if __name__ == "__main__":
    sys.exit(main())
