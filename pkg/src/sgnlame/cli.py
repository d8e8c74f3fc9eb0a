"""Command-line experiment runner.

Every run is driven by a RunConfig assembled from defaults, an optional
key=value file and command-line overrides, in that order. The resolved
config is echoed to stderr and to ``config.txt`` in the output directory.

Exit codes: 0 ok, 1 usage, 2 verification failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .geometry import Shape, make_shape
from .kernels import ElasticParams
from .mellin import ResonanceError
from .oracle import OracleError, battery_csv, run_battery
from .panelizer import refine, uniform_mesh
from .solver import (SourceSet, assemble, default_sources, default_targets, eval_interior, relative_error,
                     solve_dense, synth_dirichlet_data)
from .spectrum import RootFindingError, corner_spectrum

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("spectrum", "panelize", "solve", "sweep", "compare", "verify")
SHAPES = ("droplet", "triangle", "lshape", "circle")
RUN_COLUMNS = ("case_id", "shape", "theta", "method", "p", "eps_pan", "dofs", "assemble_s", "solve_s", "rel_error",
               "cond_est", "flags")


class UsageError(ValueError):
    pass


class DenseSizeError(ArithmeticError):
    """The mesh is too large for a dense solve on this machine."""


def _floats(text: str) -> tuple[float, ...]:
    """Comma-separated reals; 'pi' is allowed as a factor, e.g. '3pi/4' or '0.5*pi'."""
    out = []
    for item in filter(None, (x.strip() for x in text.split(","))):
        out.append(_real(item))
    return tuple(out)


def _real(text: str) -> float:
    t = text.strip().lower().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    num = num.replace("*", "").replace("pi", "")
    value = (float(num) if num not in ("", "+", "-") else float(num + "1")) * np.pi
    return value / float(den) if den else value


def _points(text: str) -> tuple[tuple[float, float], ...]:
    """'x,y; x,y; ...' -> tuple of pairs."""
    pts = []
    for item in filter(None, (x.strip() for x in text.split(";"))):
        x, y = _floats(item)
        pts.append((x, y))
    return tuple(pts)


@dataclass(frozen=True)
class RunConfig:
    command: str = "solve"
    shape: str = "droplet"
    theta: float = np.pi / 2
    thetas: tuple[float, ...] = ()
    lam: float = 1.0
    mu: float = 2.0
    p: int = 16
    eps_pan: float = 1e-9
    eps_list: tuple[float, ...] = ()
    uniform_panels: int = 10
    max_dofs: int = 12000
    sources: tuple[tuple[float, float], ...] = ()
    strengths: tuple[tuple[float, float], ...] = ()
    targets: tuple[tuple[float, float], ...] = ()
    out_dir: str = "sgnlame_out"
    seed: int = 20240611
    workers: int = 1
    c1_shift: float = field(default=0.0, repr=False)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"command must be one of {COMMANDS}, got {self.command!r}")
        if self.shape not in SHAPES:
            raise UsageError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        for th in (self.theta, *self.thetas):
            if not 0 < th < 2 * np.pi:
                raise UsageError(f"theta must lie in (0, 2 pi), got {th}")
        if not self.mu > 0 or not self.lam + self.mu > 0:
            raise UsageError("need mu > 0 and lambda + mu > 0")
        if not 2 <= self.p <= 64:
            raise UsageError("p must lie in [2, 64]")
        if not all(e > 0 for e in (self.eps_pan, *self.eps_list)):
            raise UsageError("eps_pan values must be positive")
        if self.max_dofs < 2:
            raise UsageError("max_dofs must be at least 2")
        if self.uniform_panels < 1:
            raise UsageError("uniform_panels must be at least 1")
        if self.strengths and len(self.strengths) != len(self.sources):
            raise UsageError("strengths must match sources in number")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        return self

    @property
    def params(self) -> ElasticParams:
        return ElasticParams(self.lam, self.mu, self.c1_shift)

    def echo(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={_format_value(v)}")
        return "\n".join(lines) + "\n"


def _format_value(v) -> str:
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return "; ".join(",".join(repr(float(c)) for c in pt) for pt in v)
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_PARSERS = {
    "command": str, "shape": str, "out_dir": str,
    "theta": _real, "lam": float, "mu": float, "eps_pan": float, "c1_shift": float,
    "p": int, "uniform_panels": int, "max_dofs": int, "seed": int, "workers": int,
    "thetas": _floats, "eps_list": _floats,
    "sources": _points, "strengths": _points, "targets": _points,
}
_ALIASES = {"lambda": "lam"}


def parse_assignments(items, base: RunConfig | None = None) -> RunConfig:
    """Apply key=value strings to a config."""
    cfg = base or RunConfig()
    updates = {}
    for raw in items:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"expected key=value, got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _PARSERS:
            raise UsageError(f"unknown config key {key!r}")
        try:
            updates[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {value!r} ({exc})") from None
    return replace(cfg, **updates)


def load_config(path) -> RunConfig:
    return parse_assignments(Path(path).read_text().splitlines())


# ---------------------------------------------------------------- runs


@dataclass
class RunRecord:
    case_id: str
    shape: str
    theta: float | None
    method: str
    p: int
    eps_pan: float | None
    dofs: int
    assemble_s: float
    solve_s: float
    rel_error: float
    cond_est: float
    flags: str

    def row(self):
        th = "" if self.theta is None else repr(self.theta)
        eps = "" if self.eps_pan is None else repr(self.eps_pan)
        return [self.case_id, self.shape, th, self.method, self.p, eps, self.dofs, f"{self.assemble_s:.3f}",
                f"{self.solve_s:.3f}", f"{self.rel_error:.6e}", f"{self.cond_est:.6e}", self.flags]


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def _shape_for(cfg: RunConfig, theta: float | None = None) -> Shape:
    return make_shape(cfg.shape, cfg.theta if theta is None else theta)


def corner_spectra(shape: Shape, params: ElasticParams) -> dict:
    """Exponents per corner id; corners with the same angle share one computation."""
    cache: dict[float, object] = {}
    out = {}
    for i, c in enumerate(shape.corners):
        key = round(c.angle, 14)
        if key not in cache:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cache[key] = corner_spectrum(c.angle, params)
        out[i] = cache[key]
    return out


def _sources(cfg: RunConfig, shape: Shape) -> SourceSet:
    if not cfg.sources:
        return default_sources(shape)
    loc = np.array(cfg.sources, float)
    strengths = np.array(cfg.strengths, float) if cfg.strengths else np.tile([1.0, 0.0], (len(loc), 1))
    return SourceSet(loc, strengths)


def build_mesh(cfg: RunConfig, shape: Shape, method: str, eps_pan: float | None = None):
    if method == "UM":
        return uniform_mesh(shape, p=cfg.p, total_panels=cfg.uniform_panels)
    return refine(shape, corner_spectra(shape, cfg.params), p=cfg.p, eps_pan=eps_pan or cfg.eps_pan)


def run_case(cfg: RunConfig, method: str, theta: float | None = None, eps_pan: float | None = None,
             case_id: str = "") -> RunRecord:
    """Solve the interior Dirichlet problem with Kelvin data from exterior sources and score it.

    The error is the relative l2 error of the interior field at the targets
    against the exact source field.
    """
    params = cfg.params
    shape = _shape_for(cfg, theta)
    mesh = build_mesh(cfg, shape, method, eps_pan)
    if mesh.dofs > cfg.max_dofs:
        raise DenseSizeError(f"{method} mesh for {cfg.shape} has {mesh.dofs} DoFs, above max_dofs={cfg.max_dofs}")
    sources = _sources(cfg, shape)
    targets = np.array(cfg.targets, float) if cfg.targets else default_targets(shape)
    t0 = time.perf_counter()
    system = assemble(mesh, params)
    t1 = time.perf_counter()
    sol = solve_dense(system, synth_dirichlet_data(sources, mesh, params))
    t2 = time.perf_counter()
    err = relative_error(eval_interior(sol, mesh, targets, params), sources.field(targets, params))
    flags = []
    n_flagged = sum(p.flagged for p in mesh.panels)
    if n_flagged:
        flags.append(f"flagged_panels={n_flagged}")
    if sol.residual > 1e-10:
        flags.append(f"residual={sol.residual:.1e}")
    th = shape.theta if cfg.shape == "droplet" else None
    eps = (eps_pan or cfg.eps_pan) if method == "SGN" else None
    return RunRecord(case_id or f"{cfg.shape}-{method}", cfg.shape, th, method, cfg.p, eps, mesh.dofs, t1 - t0,
                     t2 - t1, err, sol.cond_est, ";".join(flags))


def plateau_slope(eps_values, errors, floor_factor: float = 100.0):
    """Least-squares slope of log E against log eps over points at least floor_factor above the error floor.

    Returns (slope, points used); the slope is nan with fewer than two points.
    """
    eps = np.asarray(eps_values, float)
    err = np.asarray(errors, float)
    use = err >= floor_factor * err.min()
    if use.sum() < 2:
        return float("nan"), int(use.sum())
    slope = np.polyfit(np.log10(eps[use]), np.log10(err[use]), 1)[0]
    return float(slope), int(use.sum())


# ---------------------------------------------------------------- commands


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spectrum(cfg: RunConfig) -> str:
    """Summary CSV (one row per theta) on stdout; full root tables in out_dir."""
    out = _out(cfg)
    thetas = cfg.thetas or (cfg.theta,)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "n_roots", "dominant_re", "dominant_im", "dominant_branches", "max_residual"])
    for th in thetas:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            spec = corner_spectrum(th, cfg.params)
        for wmsg in caught:
            print(f"warning: {wmsg.message}", file=sys.stderr)
        (out / f"spectrum_theta_{th:.6f}.csv").write_text(spec.to_csv())
        dom = spec.dominant_root
        res = max((r.residual for r in spec.roots), default=0.0)
        if dom is None:
            w.writerow([repr(th), 0, "", "", "", "0"])
        else:
            w.writerow([repr(th), len(spec.roots), f"{dom.z.real:.10f}", f"{dom.z.imag:.10f}",
                        "|".join(b.name for b in dom.branches), f"{res:.2e}"])
    text = buf.getvalue()
    (out / "spectrum_summary.csv").write_text(text)
    return text


def cmd_panelize(cfg: RunConfig) -> str:
    shape = _shape_for(cfg)
    mesh = build_mesh(cfg, shape, "SGN")
    text = mesh.to_csv()
    _out(cfg).joinpath("mesh.csv").write_text(text)
    _out(cfg).joinpath("shape.json").write_text(shape.describe())
    for msg in mesh.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return text


def cmd_solve(cfg: RunConfig) -> str:
    text = records_csv([run_case(cfg, "SGN", case_id=f"{cfg.shape}-SGN")])
    _out(cfg).joinpath("runs.csv").write_text(text)
    return text


def cmd_compare(cfg: RunConfig) -> str:
    recs = [run_case(cfg, "UM", case_id=f"{cfg.shape}-UM"), run_case(cfg, "SGN", case_id=f"{cfg.shape}-SGN")]
    text = records_csv(recs)
    _out(cfg).joinpath("compare.csv").write_text(text)
    return text


def cmd_sweep(cfg: RunConfig) -> str:
    """One SGN run per (theta, eps_pan); slope statistics follow as comment lines."""
    thetas = cfg.thetas or (cfg.theta,)
    eps_list = cfg.eps_list or (cfg.eps_pan,)
    jobs = [(th, eps) for th in thetas for eps in eps_list]

    def run(job):
        th, eps = job
        return run_case(cfg, "SGN", th, eps, case_id=f"{cfg.shape}-th{th:.4f}-eps{eps:.0e}")

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        recs = list(pool.map(run, jobs))
    text = records_csv(recs)
    stats = []
    if len(eps_list) > 1:
        for th in thetas:
            sub = [r for r, (t, _) in zip(recs, jobs) if t == th]
            slope, n = plateau_slope([r.eps_pan for r in sub], [r.rel_error for r in sub])
            stats.append(f"# slope theta={th!r} slope={slope:.4f} points={n}")
    text += "".join(s + "\n" for s in stats)
    _out(cfg).joinpath("sweep.csv").write_text(text)
    return text


def cmd_verify(cfg: RunConfig) -> tuple[str, list]:
    rows = run_battery(cfg.params, workers=max(cfg.workers, 4), seed=cfg.seed)
    text = battery_csv(rows)
    _out(cfg).joinpath("battery.csv").write_text(text)
    return text, [r for r in rows if not r.passed]


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sgnlame", description="Corner spectra and SGN solves for the 2D Lamé double layer.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key=value file applied before the flags")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    for f in fields(RunConfig):
        if f.name in ("command", "c1_shift"):
            continue
        flag = "--" + ("lambda" if f.name == "lam" else f.name.replace("_", "-"))
        ap.add_argument(flag, dest=f"opt_{f.name}", metavar=f.name.upper())
    return ap


def resolve_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config) if args.config else RunConfig()
    flagged = [f"{name[4:]}={v}" for name, v in vars(args).items() if name.startswith("opt_") and v is not None]
    cfg = parse_assignments(flagged + list(args.set), cfg)
    return replace(cfg, command=args.command).validate()


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve_config(argv)
    except (UsageError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    echo = cfg.echo()
    sys.stderr.write("# config\n" + echo)
    _out(cfg).joinpath("config.txt").write_text(echo)
    try:
        if cfg.command == "verify":
            text, failed = cmd_verify(cfg)
            sys.stdout.write(text)
            if failed:
                print(f"{len(failed)} battery item(s) failed:", file=sys.stderr)
                for r in failed:
                    print(f"  FAIL {r.item} (abs_err {r.abs_err:.3e})", file=sys.stderr)
                return EXIT_VERIFY
            return EXIT_OK
        handler = {"spectrum": cmd_spectrum, "panelize": cmd_panelize, "solve": cmd_solve,
                   "compare": cmd_compare, "sweep": cmd_sweep}[cfg.command]
        sys.stdout.write(handler(cfg))
        return EXIT_OK
    except (np.linalg.LinAlgError, RootFindingError, OracleError, ResonanceError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
