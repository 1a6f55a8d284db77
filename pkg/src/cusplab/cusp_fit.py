"""Cusp-wave decomposition of computed fields and the scattering phase.

Inside the cusp a solution behaves like ``b_plus w_plus + b_minus w_minus``
with ``w_pm = w0 z**tau_pm``. Averaging over cross-sections removes the
mean-zero corrector, so the averages are fitted to
``z**-(n-3/2) (alpha cos(tau0 ln z) + beta sin(tau0 ln z))`` and
``b_pm = (alpha -+ i beta) / (2 w0)``. The phase ``theta = arg(b_plus / b_minus)``
is the quantity that fixes where a given ``lambda`` becomes an eigenvalue.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import eigsh, splu

from .assembly import boundary_mass, stiffness_matrix
from .asymptotics import (
    BelowThresholdError,
    crossing_phase,
    half_order,
    normalization_w0,
    tau0,
    threshold,
    wrap_phase,
)
from .geometry import TAG_END, TAG_STEKLOV, TAG_SYMMETRY, CuspGeometry, Mesh, make_domain, make_mesh
from .reduced_model import euler_exponents, reduced_theta

MIN_SECTIONS = 20


class FitError(ValueError):
    pass


class ScatteringError(RuntimeError):
    pass


@dataclass
class WaveFit:
    lam: float
    window: tuple[float, float]
    b_plus: complex
    b_minus: complex
    theta_hat: float | None
    residual: float
    samples: int
    low_confidence: bool = False
    epsilon: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def imbalance(self) -> float:
        """``| |b+| - |b-| | / (|b+| + |b-|)``: zero for a unimodular ratio."""
        p, m = abs(self.b_plus), abs(self.b_minus)
        return abs(p - m) / (p + m)

    @property
    def ratio(self) -> complex:
        return self.b_plus / self.b_minus

    def to_json(self) -> str:
        doc = {
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "window": list(self.window),
            "b_plus_abs": abs(self.b_plus),
            "b_minus_abs": abs(self.b_minus),
            "theta_hat": self.theta_hat,
            "residual": self.residual,
            "samples": self.samples,
            "low_confidence": self.low_confidence,
        }
        return json.dumps(doc, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# cross-sectional averages
# ---------------------------------------------------------------------------


def section_integrals(mesh: Mesh, u: np.ndarray, levels) -> tuple[np.ndarray, np.ndarray]:
    """Exact integrals of a P1 field along the lines ``z = c``: returns (integral, covered length).

    Each triangle with ``z_min <= c < z_max`` contributes the chord where the
    line crosses it; the trapezoid rule is exact for the linear field.
    """
    u = np.asarray(u)
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    tri = mesh.triangles
    zt = mesh.nodes[tri, 1]
    order = np.argsort(zt, axis=1, kind="stable")
    tri = np.take_along_axis(tri, order, axis=1)
    z = np.take_along_axis(zt, order, axis=1)
    y = mesh.nodes[tri, 0]
    ut = u[tri]
    integ = np.zeros(len(levels), dtype=u.dtype)
    length = np.zeros(len(levels))
    for j, c in enumerate(levels):
        hit = np.flatnonzero((z[:, 0] <= c) & (c < z[:, 2]))
        if not len(hit):
            continue
        z0, z1, z2 = z[hit, 0], z[hit, 1], z[hit, 2]
        s02 = (c - z0) / (z2 - z0)
        ya = y[hit, 0] + s02 * (y[hit, 2] - y[hit, 0])
        ua = ut[hit, 0] + s02 * (ut[hit, 2] - ut[hit, 0])
        low = c < z1
        with np.errstate(divide="ignore", invalid="ignore"):
            s01 = np.where(low, (c - z0) / (z1 - z0), 0.0)
            s12 = np.where(low, 0.0, (c - z1) / (z2 - z1))
        yb = np.where(low, y[hit, 0] + s01 * (y[hit, 1] - y[hit, 0]), y[hit, 1] + s12 * (y[hit, 2] - y[hit, 1]))
        ub = np.where(low, ut[hit, 0] + s01 * (ut[hit, 1] - ut[hit, 0]), ut[hit, 1] + s12 * (ut[hit, 2] - ut[hit, 1]))
        L = np.abs(yb - ya)
        integ[j] = np.sum(L * 0.5 * (ua + ub))
        length[j] = np.sum(L)
    return integ, length


def section_averages(mesh: Mesh, u: np.ndarray, levels) -> np.ndarray:
    integ, length = section_integrals(mesh, u, levels)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(length > 0, integ / np.where(length > 0, length, 1.0), np.nan)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def _w0_or_one(lam, geom, variant):
    try:
        return normalization_w0(lam, geom, variant), None
    except BelowThresholdError as exc:
        return 1.0, str(exc)


def fit_profile(z: np.ndarray, values: np.ndarray, lam: float, geom: CuspGeometry, w0_variant: str = "literal"):
    """Least-squares ``(alpha, beta)`` for samples of a cusp profile; values may be complex."""
    t = tau0(lam, geom)
    z = np.asarray(z, dtype=float)
    amp = z ** (-half_order(geom))
    B = np.column_stack([amp * np.cos(t * np.log(z)), amp * np.sin(t * np.log(z))])
    coef, *_ = np.linalg.lstsq(B, values, rcond=None)
    fit = B @ coef
    residual = float(np.linalg.norm(values - fit) / np.linalg.norm(values))
    alpha, beta = coef
    w0, note = _w0_or_one(lam, geom, w0_variant)
    b_plus = complex((alpha - 1j * beta) / (2.0 * w0))
    b_minus = complex((alpha + 1j * beta) / (2.0 * w0))
    return b_plus, b_minus, residual, note


def fit_cusp_wave(u: np.ndarray, mesh: Mesh, lam: float, window: tuple[float, float], geom: CuspGeometry,
                  samples: int = 40, w0_variant: str = "literal") -> WaveFit:
    """Decompose a nodal field ``u`` into incoming and outgoing cusp waves over ``window``."""
    if lam <= threshold(geom):
        raise BelowThresholdError("cusp waves oscillate only above the threshold")
    z1, z2 = map(float, window)
    eps = mesh.epsilon
    if not (z1 < z2 and z2 <= geom.d and (not np.isfinite(eps) or z1 > eps)):
        raise FitError(f"window {window} must lie inside (eps, d) = ({eps}, {geom.d})")
    if samples < MIN_SECTIONS:
        raise FitError(f"need at least {MIN_SECTIONS} cross-sections, got {samples}")
    z = np.geomspace(z1, z2, samples)
    w = section_averages(mesh, u, z)
    ok = np.isfinite(w)
    if ok.sum() < MIN_SECTIONS:
        raise FitError(f"only {int(ok.sum())} cross-sections intersect the mesh")
    t = tau0(lam, geom)
    low = t * math.log(z2 / z1) < math.pi
    if low:
        warnings.warn("fit window covers less than half an oscillation; low confidence", RuntimeWarning, stacklevel=2)
    b_plus, b_minus, residual, note = fit_profile(z[ok], w[ok], lam, geom, w0_variant)
    big, small = max(abs(b_plus), abs(b_minus)), min(abs(b_plus), abs(b_minus))
    theta = wrap_phase(np.angle(b_plus / b_minus)) if small > 10.0 * residual * big else None
    extra = {"w0_note": note} if note else {}
    return WaveFit(float(lam), (z1, z2), b_plus, b_minus, theta, residual, int(ok.sum()), low,
                   float(eps) if np.isfinite(eps) else None, extra)


def estimate_theta_from_crossing(epsilon_star: float, lambda_flat: float, geom: CuspGeometry) -> float:
    """The phase that makes ``lambda_flat`` an eigenvalue at ``epsilon_star``."""
    if lambda_flat <= threshold(geom):
        raise BelowThresholdError("crossings exist only above the threshold")
    return crossing_phase(epsilon_star, lambda_flat, geom)


def phase_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    d = abs(wrap_phase(a) - wrap_phase(b))
    return min(d, 2 * math.pi - d)


# ---------------------------------------------------------------------------
# scattering phase from fixed-lambda solves
# ---------------------------------------------------------------------------


@dataclass
class ScatteringResult:
    lam: float
    theta: float
    s: complex
    delta: float
    window: tuple[float, float]
    method: str
    residual: float
    extra: dict = field(default_factory=dict)

    @property
    def modulus(self) -> float:
        return abs(self.s)


def _truncated_pieces(geom: CuspGeometry, delta: float, h: float, grading: float, mesh: Mesh | None):
    if mesh is None:
        mesh = make_mesh(make_domain(geom, delta), h, grading)
    if np.any(mesh.edge_tags == TAG_SYMMETRY):
        raise ValueError("scattering solves need the full (not half) mesh")
    A = stiffness_matrix(mesh).tocsr()
    M = boundary_mass(mesh, [TAG_STEKLOV]).tocsr()
    M_end = boundary_mass(mesh, [TAG_END]).tocsr()
    end = mesh.tag_nodes(TAG_END)
    return mesh, A, M, M_end, end


def _resonance_gap(K: sp.csr_matrix, M: sp.csr_matrix, lam: float) -> float:
    """Distance from ``lam`` to the nearest eigenvalue of the pencil ``(K, M)``."""
    try:
        vals = eigsh(K.tocsc(), k=1, M=M.tocsc(), sigma=lam, which="LM", return_eigenvectors=False)
    except Exception:  # ARPACK failures only weaken the diagnostic
        return float("inf")
    return float(np.min(np.abs(vals - lam)))


def _standing_solve(A, M, end, lam, data):
    n = A.shape[0]
    free = np.setdiff1d(np.arange(n), end)
    K = (A - lam * M).tocsr()
    u = np.zeros(n, dtype=float)
    u[end] = data
    u[free] = splu(K[free][:, free].tocsc()).solve(-(K[free][:, end] @ u[end]))
    gap = _resonance_gap(A[free][:, free], M[free][:, free], lam)
    return u, gap


def scattering_phase(lam: float, delta: float, window: tuple[float, float], geom: CuspGeometry, h: float = 0.02,
                     grading: float = 1.0, method: str = "transparent", samples: int = 40,
                     mesh: Mesh | None = None, resonance_tol: float = 1e-3) -> ScatteringResult:
    """Scattering coefficient ``s = b_plus / b_minus`` of the cusp at fixed ``lam``.

    ``method="transparent"`` truncates the cusp at ``z = delta`` with the
    condition that lets ``w_plus`` leave freely while a unit ``w_minus``
    enters; ``|s| = 1`` is then a genuine check. ``"standing"`` imposes
    ``u = 1`` on the end and fits the real standing wave, so ``|s| = 1`` holds
    by construction and only the phase is informative. ``"two_solve"``
    combines two Dirichlet solves with different end data; away from the
    end both reduce to the same standing wave, so the 2x2 matching system
    is singular and the method reports that.
    """
    if lam <= threshold(geom):
        raise BelowThresholdError("scattering needs lambda > lambda_dagger")
    if not delta < window[0]:
        raise ValueError("delta must lie below the fit window")
    mesh, A, M, M_end, end = _truncated_pieces(geom, delta, h, grading, mesh)
    extra: dict = {"mesh_nodes": mesh.n_nodes}
    if method == "transparent":
        tp, tm = euler_exponents(lam, geom)
        K = (A - lam * M + (tp / delta) * M_end).astype(complex).tocsc()
        rhs = ((tp - tm) / delta) * delta**tm * (M_end @ np.ones(mesh.n_nodes))
        u = splu(K).solve(rhs.astype(complex))
    elif method == "standing":
        u, gap = _standing_solve(A, M, end, lam, np.ones(len(end)))
        extra["resonance_gap"] = gap
        if gap < resonance_tol:
            return scattering_phase(lam, delta * 1.05, window, geom, h, grading, method, samples, None, resonance_tol)
    elif method == "two_solve":
        return _two_solve(lam, delta, window, geom, mesh, A, M, end, samples)
    else:
        raise ValueError(f"unknown method {method!r}")
    fit = fit_cusp_wave(u, mesh, lam, window, geom, samples=samples, w0_variant="tau0")
    s = fit.b_plus / fit.b_minus
    extra["b_minus"] = [fit.b_minus.real, fit.b_minus.imag]
    return ScatteringResult(float(lam), wrap_phase(np.angle(s)), complex(s), float(delta), fit.window, method,
                            fit.residual, extra)


def _two_solve(lam, delta, window, geom, mesh, A, M, end, samples, cond_max: float = 1e6):
    y = mesh.nodes[end, 0]
    half = geom.a * delta**2
    data_sets = [(np.ones_like(y), y / half), (np.ones_like(y), (y / half) ** 2 - 1.0 / 3.0)]
    last = None
    for first, second in data_sets:
        coefs = []
        for data in (first, second):
            u, _ = _standing_solve(A, M, end, lam, data)
            z = np.geomspace(*window, samples)
            w = section_averages(mesh, u, z)
            b_plus, b_minus, _, _ = fit_profile(z, w, lam, geom, "tau0")
            coefs.append((b_plus, b_minus))
        # combine c1 u1 + c2 u2 to get b_minus = 1, then s = b_plus; needs both rows independent
        C = np.array([[coefs[0][1], coefs[1][1]], [coefs[0][0], coefs[1][0]]])
        last = np.linalg.cond(C)
        if last < cond_max:
            c = np.linalg.solve(C, np.array([1.0, 0.0]))
            s = complex(C[1] @ c)
            return ScatteringResult(float(lam), wrap_phase(np.angle(s)), s, float(delta), tuple(window),
                                    "two_solve", float("nan"), {"condition": last})
    raise ScatteringError(f"two-solve matching is singular (condition {last:.3g}): "
                          "both solves carry the same standing wave away from the end")


def reduced_scattering_phase(lam: float, geom: CuspGeometry, window: tuple[float, float], d: float | None = None,
                             samples: int = 40) -> tuple[float, float]:
    """Phase of the one-dimensional model with a Dirichlet end at ``z = d``.

    Integrates the Euler equation in ``t = ln z`` from ``z = d`` into the
    window and fits the same basis as the finite-element fits. Returns
    ``(theta, closed_form_theta)``.
    """
    d = geom.d if d is None else d
    Lam = lam * geom.omega_boundary_measure / geom.omega_measure
    p = 2.0 * geom.n - 3.0

    def rhs(t, y):
        r = math.exp(p * t)
        return [y[1] / r, -Lam * r * y[0]]

    t = np.linspace(math.log(window[1]), math.log(window[0]), samples)
    sol = solve_ivp(rhs, (math.log(d), t[-1]), [0.0, 1.0], t_eval=t, method="DOP853", rtol=1e-13, atol=1e-15)
    b_plus, b_minus, _, _ = fit_profile(np.exp(t), sol.y[0], lam, geom, "tau0")
    return wrap_phase(np.angle(b_plus / b_minus)), reduced_theta(lam, geom, d)
