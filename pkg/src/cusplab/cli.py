"""Command-line interface: ``cusplab <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
Configuration comes from an optional JSON file (``--config``); flags given
on the command line win. ``CUSPLAB_OUT`` overrides ``--out``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .corrector import CompatibilityError, NonzeroMeanError, solve_boundary_layer, solve_W0
from .cusp_fit import FitError, ScatteringError, estimate_theta_from_crossing, scattering_phase
from .eigensolve import EigensolveError, steklov_spectrum
from .assembly import assemble
from .geometry import BodySpec, CuspGeometry, MeshError, make_domain, make_mesh
from .reduced_model import EndBC, reduced_eigenvalues_closed_form, reduced_eigenvalues_fd, spectra_to_csv
from .sweep import (
    SWEEP_FILE,
    ResolutionError,
    SweepError,
    SweepResult,
    branches_csv,
    branches_svg,
    classify_branches,
    crossing_match,
    detect_crossings,
    gliding_report,
    rows_csv,
    sweep_epsilon,
    track_branches,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
NUMERIC_ERRORS = (EigensolveError, SweepError, FitError, ScatteringError, CompatibilityError, MeshError,
                  np.linalg.LinAlgError, ArithmeticError)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    a: float = 1.0
    d: float = 1.0
    n: int = 2
    body: str = "half_disk"
    body_radius: float | None = None
    join_smoothness: int = 2
    end: str = "dirichlet"
    mirror_symmetric: bool = True
    h: float = 0.02
    grading: float = 1.0
    eps: float | None = None
    eps_min: float = 1e-3
    eps_max: float = 1e-1
    per_decade: int = 30
    count: int = 20
    odd_sector: bool = False
    lambda_flat: float | None = None
    theta: float | None = None
    out: str = "cusplab_out"
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    seed: int = 0
    grid_points: int = 10_000
    left_end: str = "dirichlet"
    n_modes: int = 200
    truncation: float | None = None
    lambda_min: float | None = None
    lambda_max: float | None = None
    lambda_points: int = 9
    delta: float = 1e-3
    window: tuple | None = None
    method: str = "transparent"

    def geometry(self) -> CuspGeometry:
        return CuspGeometry(a=self.a, d=self.d, n=self.n,
                            body=BodySpec(self.body, self.body_radius, self.join_smoothness),
                            end_condition=self.end, mirror_symmetric=self.mirror_symmetric)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if out["window"] is not None:
            out["window"] = list(out["window"])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        if data.get("window") is not None:
            data["window"] = tuple(data["window"])
        return cls(**data)

    def to_json(self) -> str:
        return dumps17(self.to_dict())


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return "null"
        return f"{x:.17g}"
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(type(x))


def dumps17(obj, indent: int = 1, level: int = 0) -> str:
    """JSON with every float written as ``%.17g`` (round-trip safe)."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps17(v, indent, level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(dumps17(v, indent, level + 1) for v in obj) + "]"
    if isinstance(obj, complex):
        return dumps17([obj.real, obj.imag], indent, level)
    return _fmt(obj)


def _out_dir(cfg: RunConfig) -> Path:
    return Path(os.environ.get("CUSPLAB_OUT") or cfg.out)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_predict(cfg: RunConfig) -> int:
    geom = cfg.geometry()
    pred = asy.predict(geom, cfg.lambda_flat, cfg.theta)
    print(dumps17(pred.to_dict()))
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    if cfg.eps is None:
        raise UsageError("solve needs --eps")
    geom = cfg.geometry()
    mesh = make_mesh(make_domain(geom, cfg.eps), cfg.h, cfg.grading)
    out = _out_dir(cfg)
    mesh_file = out / f"mesh_{mesh.digest()[:12]}.txt"
    mesh.save(mesh_file)
    sys_ = assemble(mesh, geom.end_condition, odd_sector=cfg.odd_sector)
    spec = steklov_spectrum(sys_, cfg.count, mesh_id=mesh.digest())
    spec.mesh_file = str(mesh_file)
    doc = json.loads(spec.to_json())
    _write(out / "spectrum.json", dumps17(doc) + "\n")
    for v in spec.eigenvalues:
        print(f"{v:.17g}")
    return EXIT_OK


def write_reports(result: SweepResult, out: Path, lambda_flat: float | None = None) -> dict:
    """All derived sweep reports; a pure function of the persisted sweep."""
    geom = CuspGeometry.from_dict(result.geom)
    branches = classify_branches(track_branches(result), geom)
    lam_flat = lambda_flat if lambda_flat is not None else 2.0 * asy.threshold(geom)
    cs = detect_crossings(result, lam_flat, geom, branches)
    summary = {"geom_hash": result.geom_hash, "lambda_dagger": asy.threshold(geom), "crossings": cs.to_dict(),
               "branches": len(branches),
               "labels": {lab: sum(b.label.value == lab for b in branches) for lab in ("gliding", "stable", "unclassified")}}
    predicted: list = []
    if cs.crossings:
        theta = estimate_theta_from_crossing(cs.crossings[0], lam_flat, geom)
        summary["theta_from_first_crossing"] = theta
        summary["crossing_match"] = crossing_match(cs, theta, geom)
        predicted = list(asy.blinking_epsilons(lam_flat, theta, range(-2, 12), geom))
        summary["predicted_epsilons"] = predicted
        summary["predicted_epsilons_as_printed"] = list(asy.blinking_epsilons_as_printed(lam_flat, theta, range(0, 4), geom))
    _write(out / "branches.csv", branches_csv(branches))
    _write(out / "gliding.csv", rows_csv(gliding_report(branches, geom)))
    _write(out / "report.json", dumps17(summary) + "\n")
    _write(out / "branches.svg", branches_svg(branches, geom, lam_flat, predicted))
    return summary


def cmd_sweep(cfg: RunConfig) -> int:
    geom = cfg.geometry()
    out = _out_dir(cfg)
    result = sweep_epsilon(geom, cfg.eps_min, cfg.eps_max, cfg.per_decade, cfg.count, cfg.h, cfg.grading,
                           out_dir=out, jobs=cfg.jobs)
    _write(out / "config.json", cfg.to_json() + "\n")
    summary = write_reports(result, out, cfg.lambda_flat)
    print(dumps17(summary["crossings"]))
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    result = SweepResult.load(out / SWEEP_FILE)
    summary = write_reports(result, out, cfg.lambda_flat)
    print(dumps17(summary["crossings"]))
    return EXIT_OK


def cmd_reduced(cfg: RunConfig) -> int:
    if cfg.eps is None:
        raise UsageError("reduced needs --eps")
    geom = cfg.geometry()
    if EndBC(cfg.left_end) is EndBC.DIRICHLET:
        spec = reduced_eigenvalues_closed_form(cfg.eps, cfg.d, geom, cfg.count)
    else:
        spec = reduced_eigenvalues_fd(cfg.eps, cfg.d, geom, cfg.grid_points, (cfg.left_end, "dirichlet"), cfg.count)
    text = spectra_to_csv([spec])
    _write(_out_dir(cfg) / "reduced.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_layer(cfg: RunConfig) -> int:
    geom = cfg.geometry()
    lam = cfg.lambda_flat if cfg.lambda_flat is not None else 2.0 * asy.threshold(geom)
    W = solve_W0(lam, geom, "+")
    bl = solve_boundary_layer(lambda e: np.real(W(e)), geom.a, cfg.n_modes, cfg.truncation)
    out = _out_dir(cfg)
    modes = [{"k": k + 1, "frequency": f, "amplitude": c} for k, (f, c) in enumerate(bl.modes)]
    _write(out / "layer_modes.csv", rows_csv(modes))
    xs = np.linspace(-geom.a, geom.a, 21)
    ts = np.linspace(0.0, bl.truncation_length, 41)
    grid = [{"xi_p": float(x), "xi_n": float(t), "value": float(bl(x, t))} for t in ts for x in xs]
    _write(out / "layer_grid.csv", rows_csv(grid))
    print(dumps17({"decay_rate": bl.decay_rate, "mean_flux": bl.mean_flux, "tail_bound": bl.tail_bound,
                   "truncation_length": bl.truncation_length, "modes": len(bl.modes)}))
    return EXIT_OK


def cmd_scatter(cfg: RunConfig) -> int:
    geom = cfg.geometry()
    lam_d = asy.threshold(geom)
    lo = cfg.lambda_min if cfg.lambda_min is not None else 1.5 * lam_d
    hi = cfg.lambda_max if cfg.lambda_max is not None else 10.0 * lam_d
    window = cfg.window or (10 * cfg.delta, 0.1 * geom.d)
    mesh = make_mesh(make_domain(geom, cfg.delta), cfg.h, cfg.grading)
    rows = []
    for lam in np.linspace(lo, hi, cfg.lambda_points):
        r = scattering_phase(float(lam), cfg.delta, window, geom, cfg.h, cfg.grading, cfg.method, mesh=mesh)
        rows.append({"lambda": float(lam), "theta": r.theta, "modulus": r.modulus, "residual": r.residual})
    text = rows_csv(rows)
    _write(_out_dir(cfg) / "scatter.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"predict": cmd_predict, "solve": cmd_solve, "sweep": cmd_sweep, "reduced": cmd_reduced,
            "layer": cmd_layer, "scatter": cmd_scatter, "report": cmd_report}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cusplab", description="Steklov spectra of a blunted planar cusp.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration; flags override it")
    S = argparse.SUPPRESS
    for flag, typ in [("--a", float), ("--d", float), ("--n", int), ("--h", float), ("--grading", float),
                      ("--eps", float), ("--eps-min", float), ("--eps-max", float), ("--per-decade", int),
                      ("--count", int), ("--lambda-flat", float), ("--theta", float), ("--out", str),
                      ("--jobs", int), ("--seed", int), ("--grid-points", int), ("--n-modes", int),
                      ("--truncation", float), ("--lambda-min", float), ("--lambda-max", float),
                      ("--lambda-points", int), ("--delta", float), ("--body-radius", float)]:
        p.add_argument(flag, type=typ, default=S)
    p.add_argument("--end", choices=["dirichlet", "neumann", "steklov"], default=S)
    p.add_argument("--left-end", choices=["dirichlet", "neumann"], default=S)
    p.add_argument("--body", choices=["half_disk", "stadium"], default=S)
    p.add_argument("--method", choices=["transparent", "standing", "two_solve"], default=S)
    p.add_argument("--window", type=float, nargs=2, default=S)
    p.add_argument("--odd-sector", action="store_true", default=S)
    return p


def parse_config(argv) -> tuple[str, RunConfig]:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    data: dict = {}
    cfg_path = args.pop("config", None)
    if cfg_path:
        data.update(json.loads(Path(cfg_path).read_text()))
    data.update({k: v for k, v in args.items()})
    if "window" in data and data["window"] is not None:
        data["window"] = tuple(data["window"])
    return command, RunConfig.from_dict(data)


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command, cfg = parse_config(argv)
        return COMMANDS[command](cfg)
    except (UsageError, ResolutionError, asy.BelowThresholdError, NonzeroMeanError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(dumps17({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
