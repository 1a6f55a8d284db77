"""Sweeps over the blunting size: spectra on a log grid, branch tracking and reports."""
from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .assembly import assemble
from .asymptotics import BelowThresholdError, blinking_epsilons, gliding_speed, tau0, threshold
from .eigensolve import RESIDUAL_TOL, steklov_spectrum
from .geometry import CuspGeometry, make_domain, make_mesh

log = logging.getLogger(__name__)

MIN_EPS_FACTOR = 1e-3
MIN_PER_DECADE = 20
MAX_FAILURE_FRACTION = 0.10
SWEEP_FILE = "sweep.json"


class SweepError(RuntimeError):
    pass


class ResolutionError(ValueError):
    pass


class Label(str, enum.Enum):
    GLIDING = "gliding"
    STABLE = "stable"
    UNCLASSIFIED = "unclassified"


# ---------------------------------------------------------------------------
# sweep data
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    geom: dict
    geom_hash: str
    epsilons: list
    records: list  # one dict per epsilon: eigenvalues, parity, residuals, status
    settings: dict = field(default_factory=dict)

    @property
    def spectra(self) -> list:
        return [np.asarray(r["eigenvalues"]) for r in self.records]

    def ok_records(self) -> list:
        return [r for r in self.records if r["status"] == "ok"]

    def to_json(self) -> str:
        doc = {
            "geom": self.geom,
            "geom_hash": self.geom_hash,
            "settings": self.settings,
            "epsilons": self.epsilons,
            "records": self.records,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        doc = json.loads(text)
        return cls(doc["geom"], doc["geom_hash"], doc["epsilons"], doc["records"], doc.get("settings", {}))

    def save(self, path: str | Path) -> None:
        atomic_write(path, self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "SweepResult":
        return cls.from_json(Path(path).read_text())


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def synthetic_sweep(epsilons: Sequence[float], spectra: Sequence[Sequence[float]], parity=None) -> SweepResult:
    """Wrap precomputed spectra (closed forms, test data) as a :class:`SweepResult`."""
    records = []
    for i, (e, lam) in enumerate(zip(epsilons, spectra)):
        lam = [float(v) for v in lam]
        par = list(parity[i]) if parity is not None else ["none"] * len(lam)
        records.append({"epsilon": float(e), "eigenvalues": lam, "parity": par,
                        "residuals": [0.0] * len(lam), "status": "ok"})
    return SweepResult({}, "synthetic", [float(e) for e in epsilons], records, {"synthetic": True})


def epsilon_grid(eps_min: float, eps_max: float, points_per_decade: int) -> list:
    """Descending log-spaced grid including both ends."""
    n = int(round(points_per_decade * math.log10(eps_max / eps_min)))
    return [float(e) for e in np.logspace(math.log10(eps_max), math.log10(eps_min), n + 1)]


def solve_at(geom: CuspGeometry, epsilon: float, count: int, h: float, grading: float = 1.0,
             split: bool | None = None, keep_vectors: bool = False):
    """Lowest ``count`` eigenvalues at one blunting size, with parity labels.

    For mirror-symmetric geometry the even and odd sectors are solved on
    the half mesh and merged; this is the full spectrum at lower cost.
    """
    split = geom.mirror_symmetric if split is None else split
    mesh = make_mesh(make_domain(geom, epsilon), h, grading)
    if split:
        parts = []
        for kind in ("even", "odd"):
            sys = assemble(mesh, geom.end_condition, odd_sector=kind == "odd", even_sector=kind == "even")
            parts.append((kind, steklov_spectrum(sys, count)))
        lam = np.concatenate([p[1].eigenvalues for p in parts])
        res = np.concatenate([p[1].residuals for p in parts])
        par = np.concatenate([[p[0]] * len(p[1].eigenvalues) for p in parts])
        order = np.argsort(lam, kind="stable")[:count]
        out = {"eigenvalues": lam[order], "residuals": res[order], "parity": par[order]}
        if keep_vectors:
            out["spectra"] = dict(parts)
    else:
        sys = assemble(mesh, geom.end_condition)
        spec = steklov_spectrum(sys, count)
        out = {"eigenvalues": spec.eigenvalues, "residuals": spec.residuals,
               "parity": np.array(["none"] * count)}
        if keep_vectors:
            out["spectra"] = {"full": spec}
    out["mesh_id"] = mesh.digest()
    out["mesh_nodes"] = mesh.n_nodes
    return out


def _solve_record(geom_dict: dict, epsilon: float, count: int, h: float, grading: float) -> dict:
    geom = CuspGeometry.from_dict(geom_dict)
    try:
        r = solve_at(geom, epsilon, count, h, grading)
    except Exception as exc:  # recorded, the sweep goes on
        return {"epsilon": epsilon, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    bad = float(np.max(r["residuals"]))
    rec = {
        "epsilon": epsilon,
        "eigenvalues": [float(v) for v in r["eigenvalues"]],
        "parity": [str(p) for p in r["parity"]],
        "residuals": [float(v) for v in r["residuals"]],
        "mesh_id": r["mesh_id"],
        "mesh_nodes": int(r["mesh_nodes"]),
        "status": "ok" if bad <= RESIDUAL_TOL else "failed",
    }
    if rec["status"] == "failed":
        rec["error"] = f"residual {bad:.3g} exceeds {RESIDUAL_TOL}"
    return rec


def sweep_epsilon(geom: CuspGeometry, eps_min: float, eps_max: float, points_per_decade: int = 30, count: int = 20,
                  h: float = 0.02, grading: float = 1.0, out_dir: str | Path | None = None, jobs: int = 1,
                  epsilons: Sequence[float] | None = None, progress: Callable[[dict], None] | None = None) -> SweepResult:
    """Spectra on a descending log grid of ``eps``.

    With ``out_dir`` the result is persisted after every solve by atomic
    replacement, and a rerun resumes from what is on disk. Failed solves
    are recorded; more than 10% failures aborts.
    """
    if eps_min < MIN_EPS_FACTOR * geom.d:
        raise ResolutionError(
            f"eps_min={eps_min:g} < {MIN_EPS_FACTOR:g} d: the neck width a eps^2 = {geom.a * eps_min**2:.3g} "
            f"cannot be resolved at feasible h (h={h:g})")
    if not eps_min < eps_max < geom.d / 4:
        raise ValueError("need eps_min < eps_max < d/4")
    if epsilons is None:
        if points_per_decade < MIN_PER_DECADE:
            raise ValueError(f"points_per_decade must be >= {MIN_PER_DECADE} for crossing interpolation")
        epsilons = epsilon_grid(eps_min, eps_max, points_per_decade)
    epsilons = sorted({float(e) for e in epsilons}, reverse=True)
    settings = {"h": h, "grading": grading, "count": count, "points_per_decade": points_per_decade,
                "eps_min": eps_min, "eps_max": eps_max, "split_sectors": bool(geom.mirror_symmetric)}
    result = SweepResult(geom.to_dict(), geom.geom_hash(), epsilons, [], settings)

    path = Path(out_dir) / SWEEP_FILE if out_dir is not None else None
    done: dict = {}
    if path is not None and path.exists():
        old = SweepResult.load(path)
        if old.geom_hash != result.geom_hash or old.settings != settings or old.epsilons != epsilons:
            raise SweepError(f"{path} holds a different sweep; use another output directory")
        done = {r["epsilon"]: r for r in old.records}
    todo = [e for e in epsilons if e not in done]

    def store(rec):
        done[rec["epsilon"]] = rec
        result.records = [done[e] for e in epsilons if e in done]
        if path is not None:
            result.save(path)
        if progress:
            progress(rec)

    args = (result.geom, count, h, grading)
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_solve_record, args[0], e, *args[1:]) for e in todo]
            for fut in futures:
                store(fut.result())
    else:
        for e in todo:
            store(_solve_record(args[0], e, *args[1:]))
    result.records = [done[e] for e in epsilons]
    if path is not None:
        result.save(path)
    failed = sum(r["status"] != "ok" for r in result.records)
    if failed > MAX_FAILURE_FRACTION * len(epsilons):
        raise SweepError(f"{failed} of {len(epsilons)} solves failed")
    return result


# ---------------------------------------------------------------------------
# branch tracking
# ---------------------------------------------------------------------------


@dataclass
class Branch:
    points: list  # (epsilon, lambda, record index, eigenvalue index)
    parity: str = "none"
    label: Label = Label.UNCLASSIFIED
    slopes: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    branch_id: int = -1

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def __len__(self) -> int:
        return len(self.points)


def _predict(branch: Branch, log_eps_next: float) -> float:
    pts = branch.points
    if len(pts) < 2:
        return pts[-1][1]
    (e1, l1), (e2, l2) = pts[-2][:2], pts[-1][:2]
    slope = (l2 - l1) / (math.log(e2) - math.log(e1))
    return l2 + slope * (log_eps_next - math.log(e2))


def track_branches(sweep: SweepResult, ratio_max: float = 10 ** (1 / 20), ambiguity: float = 1.1,
                   gate: float | None = None) -> list[Branch]:
    """Follow eigenvalues from one blunting size to the next.

    Branches of each parity are extended greedily: all (branch, eigenvalue)
    pairs are ranked by the distance to the slope-extrapolated prediction
    and taken in that order. A branch whose two best candidates are within
    ``ambiguity`` of each other is ended and flagged; its candidate starts
    a new branch. Unmatched eigenvalues start branches.
    """
    recs = [(i, r) for i, r in enumerate(sweep.records) if r["status"] == "ok"]
    eps = [r["epsilon"] for _, r in recs]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    for a, b in zip(eps, eps[1:]):
        if a / b > ratio_max * (1 + 1e-9):
            raise ValueError(f"consecutive epsilon ratio {a / b:.4g} exceeds {ratio_max:.4g}")
    finished: list[Branch] = []
    active: list[Branch] = []
    for step, (ri, rec) in enumerate(recs):
        lam = np.asarray(rec["eigenvalues"], dtype=float)
        par = np.asarray(rec.get("parity", ["none"] * len(lam)))
        used = np.zeros(len(lam), bool)
        next_active: list[Branch] = []
        if active:
            le = math.log(rec["epsilon"])
            pred = np.array([_predict(b, le) for b in active])
            cost = np.abs(lam[None, :] - pred[:, None])
            same = par[None, :] == np.array([b.parity for b in active])[:, None]
            cost = np.where(same, cost, np.inf)
            limit = gate if gate is not None else np.inf
            matched = np.zeros(len(active), bool)
            flagged = np.zeros(len(active), bool)
            for bi in range(len(active)):
                c = np.sort(cost[bi])
                if len(c) >= 2 and np.isfinite(c[1]) and c[1] <= ambiguity * c[0] + 1e-12:
                    flagged[bi] = True
            for flat in np.argsort(cost, axis=None, kind="stable"):
                bi, j = divmod(int(flat), len(lam))
                if not np.isfinite(cost[bi, j]) or cost[bi, j] > limit:
                    break
                if matched[bi] or used[j] or flagged[bi]:
                    continue
                matched[bi] = used[j] = True
                active[bi].points.append((rec["epsilon"], float(lam[j]), ri, j))
                next_active.append(active[bi])
            for bi, b in enumerate(active):
                if not matched[bi]:
                    if flagged[bi]:
                        b.flags.append(f"ambiguous match at eps={rec['epsilon']:.6g}")
                    finished.append(b)
        for j in np.flatnonzero(~used):
            next_active.append(Branch([(rec["epsilon"], float(lam[j]), ri, int(j))], parity=str(par[j])))
        active = next_active
    finished.extend(active)
    finished.sort(key=lambda b: (-b.points[0][0], b.points[0][1]))
    for k, b in enumerate(finished):
        b.branch_id = k
        b.slopes = list(branch_slopes(b))
    return finished


def branch_slopes(branch: Branch) -> np.ndarray:
    """``d lambda / d eps`` from (non-uniform) centered differences; NaN at the two ends."""
    out = np.full(len(branch), np.nan)
    if len(branch) >= 3:
        out[1:-1] = np.gradient(branch.lambdas, branch.epsilons)[1:-1]
    return out


def classify_branches(branches: list[Branch], geom: CuspGeometry, stable_tol: float = 1e-4,
                      ratio_band=(0.3, 3.0), min_points: int = 5, log_d: float | None = None) -> list[Branch]:
    """Attach diagnostic labels; they describe behaviour and do not partition the spectrum."""
    lam_d = threshold(geom)
    for b in branches:
        e, l = b.epsilons, b.lambdas
        b.label = Label.UNCLASSIFIED
        if len(b) >= 2 and e[0] / e[-1] >= 10 * (1 - 1e-9):
            scale = max(abs(l).max(), 1e-300)
            if (l.max() - l.min()) / scale <= stable_tol:
                b.label = Label.STABLE
                continue
        if len(b) >= min_points:
            ok = 0
            for eps_i, lam_i, s in zip(e, l, b.slopes):
                if lam_i <= lam_d or eps_i >= 1 or not np.isfinite(s):
                    continue
                pred = _predicted_slope(lam_i, eps_i, geom, log_d)
                if pred > 0 and ratio_band[0] <= s / pred <= ratio_band[1]:
                    ok += 1
            if ok >= min_points:
                b.label = Label.GLIDING
    return branches


def _predicted_slope(lam, eps, geom, log_d=None):
    if log_d is None:
        return gliding_speed(lam, eps, geom)
    return 2.0 * (lam - threshold(geom)) / (eps * (log_d - math.log(eps)))


# ---------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------


@dataclass
class CrossingSet:
    lambda_flat: float
    crossings: list
    log_gaps: list
    predicted_gap: float
    branch_ids: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"lambda_flat": self.lambda_flat, "crossings": self.crossings, "log_gaps": self.log_gaps,
                "predicted_gap": self.predicted_gap, "branch_ids": self.branch_ids}


def detect_crossings(sweep: SweepResult, lambda_flat: float, geom: CuspGeometry, branches: list[Branch] | None = None,
                     margin: float = 1e-9) -> CrossingSet:
    """Blunting sizes at which a tracked branch passes through ``lambda_flat``.

    Each branch is interpolated monotonically (PCHIP) in ``(ln eps, lambda)``
    and the root is refined inside every bracketing interval.
    """
    lam_d = threshold(geom)
    if lambda_flat <= lam_d + margin:
        raise BelowThresholdError("no blinking at or below the threshold")
    if branches is None:
        branches = track_branches(sweep)
    found = []
    for b in branches:
        if len(b) < 2:
            continue
        x = np.log(b.epsilons)[::-1]
        y = b.lambdas[::-1] - lambda_flat
        f = PchipInterpolator(x, y) if len(b) >= 3 else (lambda t, x=x, y=y: np.interp(t, x, y))
        for k in range(len(x) - 1):
            if y[k] == 0.0:
                found.append((math.exp(x[k]), b.branch_id))
            elif y[k] * y[k + 1] < 0:
                root = brentq(lambda t: float(f(t)), x[k], x[k + 1], xtol=1e-14)
                found.append((math.exp(root), b.branch_id))
    found.sort(key=lambda p: -p[0])
    eps_star: list = []
    ids: list = []
    for e, bid in found:
        if eps_star and abs(math.log(eps_star[-1] / e)) < 1e-12:
            continue
        eps_star.append(e)
        ids.append(bid)
    gaps = [math.log(a) - math.log(b) for a, b in zip(eps_star, eps_star[1:])]
    return CrossingSet(float(lambda_flat), eps_star, gaps, math.pi / tau0(lambda_flat, geom), ids)


def crossing_match(crossings: CrossingSet, theta: float, geom: CuspGeometry, tol: float = 0.15) -> list[dict]:
    """Match each detected crossing to the nearest predicted ``eps_k`` in ``ln eps``.

    The error is relative to the predicted ``|ln eps_k|``.
    """
    if not crossings.crossings:
        return []
    lo = math.log(min(crossings.crossings))
    t = tau0(crossings.lambda_flat, geom)
    k_hi = int(math.ceil((-2 * t * lo - theta) / (2 * math.pi))) + 2
    pred = blinking_epsilons(crossings.lambda_flat, theta, range(-3, k_hi + 1), geom)
    rows = []
    for e in crossings.crossings:
        j = int(np.argmin(np.abs(np.log(pred) - math.log(e))))
        rel = abs(math.log(e) - math.log(pred[j])) / abs(math.log(pred[j]))
        rows.append({"epsilon": e, "predicted": float(pred[j]), "k": j - 3, "rel_log_error": rel, "ok": rel <= tol})
    return rows


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def gliding_report(branches: list[Branch], geom: CuspGeometry, lam_band: tuple[float, float] | None = None,
                   min_points: int = 5, log_d: float | None = None) -> list[dict]:
    """Observed vs leading-order gliding slope at every branch point above the threshold.

    ``log_d`` replaces ``|ln eps|`` by ``ln d - ln eps`` (the form that is
    exact for the one-dimensional model).
    """
    lam_d = threshold(geom)
    rows = []
    for b in branches:
        if len(b) < min_points:
            continue
        for (e, l, *_), s in zip(b.points, b.slopes):
            if l <= lam_d or e >= 1 or not np.isfinite(s):
                continue
            if lam_band is not None and not lam_band[0] <= l <= lam_band[1]:
                continue
            pred = _predicted_slope(l, e, geom, log_d)
            rows.append({"branch_id": b.branch_id, "epsilon": e, "lambda": l, "observed": float(s),
                         "predicted": float(pred), "ratio": float(s / pred) if pred else float("nan")})
    return rows


@dataclass
class TrappedModes:
    values: np.ndarray
    values_half: np.ndarray
    epsilon: float
    rel_change: np.ndarray


def trapped_modes(geom: CuspGeometry, h: float, epsilon: float | None = None, count: int = 3,
                  grading: float = 1.0) -> TrappedModes:
    """Odd-sector eigenvalues at ``eps`` and ``eps / 2`` with their relative change."""
    if not geom.mirror_symmetric:
        raise ValueError("trapped modes are computed for mirror-symmetric geometry only")
    epsilon = 1e-2 * geom.d if epsilon is None else epsilon
    vals = []
    for e in (epsilon, epsilon / 2):
        mesh = make_mesh(make_domain(geom, e), h, grading)
        vals.append(steklov_spectrum(assemble(mesh, geom.end_condition, odd_sector=True), count).eigenvalues)
    rel = np.abs(vals[0] - vals[1]) / np.abs(vals[0])
    return TrappedModes(vals[0], vals[1], float(epsilon), rel)


def stable_report(geom: CuspGeometry, lambda_tr: float, eps_list: Sequence[float], h: float, count: int = 12,
                  grading: float = 1.0, parity: str | None = None, solved: dict | None = None) -> list[dict]:
    """Distance from ``lambda_tr`` to the nearest computed eigenvalue at each ``eps``.

    ``parity`` restricts the search to one symmetry class, which separates a
    stable eigenvalue from gliding ones passing through its neighbourhood.
    ``beta_obs`` is the local order ``ln(gap_i / gap_j) / ln(eps_i / eps_j)``.
    """
    rows = []
    for e in sorted(eps_list, reverse=True):
        r = solved[e] if solved and e in solved else solve_at(geom, e, count, h, grading)
        lam = np.asarray(r["eigenvalues"])
        par = np.asarray(r["parity"])
        pool = np.flatnonzero(par == parity) if parity else np.arange(len(lam))
        if not len(pool):
            raise ValueError(f"no eigenvalues with parity {parity!r}")
        j = pool[np.argmin(np.abs(lam[pool] - lambda_tr))]
        gap = abs(lam[j] - lambda_tr)
        others = np.delete(lam, j)
        spacing = float(np.min(np.abs(others - lam[j]))) if len(others) else float("inf")
        rows.append({"epsilon": float(e), "nearest": float(lam[j]), "parity": str(par[j]), "gap": float(gap),
                     "spacing": spacing, "flagged": bool(gap > 0.5 * spacing)})
    for a, b in zip(rows, rows[1:]):
        if a["gap"] > 0 and b["gap"] > 0:
            b["beta_obs"] = math.log(a["gap"] / b["gap"]) / math.log(a["epsilon"] / b["epsilon"])
    return rows


def branches_csv(branches: list[Branch]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "lambda", "branch_id", "slope", "label", "parity"])
    for b in branches:
        for (e, l, *_), s in zip(b.points, b.slopes):
            w.writerow([f"{e:.17g}", f"{l:.17g}", b.branch_id, f"{s:.17g}", b.label.value, b.parity])
    return buf.getvalue()


def rows_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        w.writerow([f"{r[k]:.17g}" if isinstance(r.get(k), float) else r.get(k, "") for k in keys])
    return buf.getvalue()


def branches_svg(branches: list[Branch], geom: CuspGeometry, lambda_flat: float | None = None,
                 predicted_eps: Sequence[float] = (), width: int = 720, height: int = 480) -> str:
    """Plain SVG of lambda against ln eps, with the threshold and predicted crossings."""
    pts = [(math.log(e), l) for b in branches for (e, l, *_) in b.points]
    if not pts:
        return '<svg xmlns="http://www.w3.org/2000/svg"/>\n'
    xs, ys = zip(*pts)
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(ys)
    pad = 40

    def X(x):
        return pad + (x - x0) / ((x1 - x0) or 1) * (width - 2 * pad)

    def Y(y):
        return height - pad - (y - y0) / ((y1 - y0) or 1) * (height - 2 * pad)

    colors = {Label.GLIDING: "#1f77b4", Label.STABLE: "#d62728", Label.UNCLASSIFIED: "#7f7f7f"}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    lam_d = threshold(geom)
    out.append(f'<line x1="{pad}" y1="{Y(lam_d):.2f}" x2="{width - pad}" y2="{Y(lam_d):.2f}" '
               'stroke="black" stroke-dasharray="4,3"/>')
    if lambda_flat is not None:
        out.append(f'<line x1="{pad}" y1="{Y(lambda_flat):.2f}" x2="{width - pad}" y2="{Y(lambda_flat):.2f}" '
                   'stroke="#2ca02c"/>')
    for e in predicted_eps:
        x = math.log(e)
        if x0 <= x <= x1:
            out.append(f'<line x1="{X(x):.2f}" y1="{pad}" x2="{X(x):.2f}" y2="{height - pad}" '
                       'stroke="#2ca02c" stroke-dasharray="2,2"/>')
    for b in branches:
        coords = " ".join(f"{X(math.log(e)):.2f},{Y(l):.2f}" for (e, l, *_) in b.points)
        out.append(f'<polyline fill="none" stroke="{colors[b.label]}" stroke-width="1.2" points="{coords}"/>')
    out.append(f'<text x="{pad}" y="{height - 8}" font-size="12">ln eps from {x0:.3f} to {x1:.3f}</text>')
    out.append(f'<text x="4" y="{pad - 8}" font-size="12">lambda up to {y1:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
