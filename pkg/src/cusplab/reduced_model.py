"""One-dimensional Euler-type model of the cusp.

Cross-sectional averaging of the Steklov problem in the cusp gives

    -(|omega| z^(2n-2) w')' = lam |d omega| z^(2n-4) w,    eps < z < d,

whose solutions are powers ``z**tau``. With Dirichlet ends the eigenvalues
are known in closed form, which makes this model an exact oracle for the
log-periodic crossing pattern and for the gliding slope.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .asymptotics import (
    big_lambda,
    crossing_epsilons,
    half_order,
    small_lambda,
    tau0,
    threshold,
    wrap_phase,
)
from .geometry import CuspGeometry

COARSE_GRID_TOL = 1e-4


class EndBC(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass
class ReducedSpectrum:
    epsilon: float
    d: float
    Lambda_values: np.ndarray
    lambda_values: np.ndarray
    end_bc_left: EndBC = EndBC.DIRICHLET
    end_bc_right: EndBC = EndBC.DIRICHLET
    grid_points: int | None = None
    refinement_change: float | None = None
    coarse: bool = False
    extra: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return spectra_to_csv([self])


def spectra_to_csv(spectra) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "k", "Lambda", "lambda"])
    for s in spectra:
        for k, (L, l) in enumerate(zip(s.Lambda_values, s.lambda_values), start=1):
            w.writerow([f"{s.epsilon:.17g}", k, f"{L:.17g}", f"{l:.17g}"])
    return buf.getvalue()


def euler_exponents(lam: float, geom: CuspGeometry) -> tuple[complex, complex]:
    """Roots ``tau_pm = -(n - 3/2) +- sqrt((n - 3/2)**2 - Lambda)`` of the indicial equation."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    nu = half_order(geom)
    root = np.sqrt(complex(nu**2 - big_lambda(lam, geom)))
    return complex(-nu + root), complex(-nu - root)


def reduced_theta(lam: float, geom: CuspGeometry, d: float | None = None) -> float:
    """Phase of the reduced model with a Dirichlet end at ``z = d``: ``-2 tau0 ln d - pi``."""
    d = geom.d if d is None else d
    return wrap_phase(-2.0 * tau0(lam, geom) * math.log(d) - math.pi)


def _check_interval(epsilon: float, d: float) -> None:
    if not 0.0 < epsilon < d:
        raise ValueError("need 0 < epsilon < d")


def reduced_eigenvalues_closed_form(epsilon: float, d: float, geom: CuspGeometry, count: int) -> ReducedSpectrum:
    """``Lambda_k = (n - 3/2)**2 + (k pi / ln(d / eps))**2`` for Dirichlet ends."""
    _check_interval(epsilon, d)
    k = np.arange(1, count + 1, dtype=float)
    Lam = half_order(geom) ** 2 + (k * math.pi / math.log(d / epsilon)) ** 2
    return ReducedSpectrum(float(epsilon), float(d), Lam, small_lambda(Lam, geom))


def _fd_Lambda(epsilon, d, geom, grid_points, left: EndBC, right: EndBC, count: int) -> np.ndarray:
    # In t = ln z the equation is -(r w_t)_t = Lambda r w with r = exp((2n-3) t).
    # Cell-centred fluxes on a uniform t-grid give a symmetric tridiagonal pencil.
    t = np.linspace(math.log(epsilon), math.log(d), grid_points)
    dt = t[1] - t[0]
    p = 2.0 * geom.n - 3.0
    r_half = np.exp(p * 0.5 * (t[1:] + t[:-1]))
    r = np.exp(p * t)
    diag = np.zeros(grid_points)
    diag[:-1] += r_half
    diag[1:] += r_half
    off = -r_half.copy()
    mass = r * dt
    lo = 0 if left is EndBC.NEUMANN else 1
    hi = grid_points if right is EndBC.NEUMANN else grid_points - 1
    if left is EndBC.NEUMANN:
        mass[0] *= 0.5
    if right is EndBC.NEUMANN:
        mass[-1] *= 0.5
    diag = diag[lo:hi] / dt
    off = off[lo:hi - 1] / dt
    mass = mass[lo:hi]
    s = 1.0 / np.sqrt(mass)
    count = min(count, len(diag))
    return eigh_tridiagonal(diag * s * s, off * s[:-1] * s[1:], eigvals_only=True,
                            select="i", select_range=(0, count - 1))


def reduced_eigenvalues_fd(
    epsilon: float,
    d: float,
    geom: CuspGeometry,
    grid_points: int = 10_000,
    end_bcs=(EndBC.DIRICHLET, EndBC.DIRICHLET),
    count: int = 5,
    check_refinement: bool = True,
) -> ReducedSpectrum:
    """Finite-difference eigenvalues on a log-uniform grid; either end Dirichlet or Neumann.

    With ``check_refinement`` the problem is also solved on half the grid; a
    relative change above ``1e-4`` marks the result ``coarse`` and warns.
    """
    _check_interval(epsilon, d)
    if grid_points < 200:
        raise ValueError("grid_points must be >= 200")
    left, right = (EndBC(b) for b in end_bcs)
    Lam = _fd_Lambda(epsilon, d, geom, grid_points, left, right, count)
    change = None
    coarse = False
    if check_refinement:
        Lam_c = _fd_Lambda(epsilon, d, geom, (grid_points + 1) // 2, left, right, count)
        m = min(len(Lam), len(Lam_c))
        change = float(np.max(np.abs(Lam_c[:m] - Lam[:m]) / np.abs(Lam[:m])))
        if change > COARSE_GRID_TOL:
            coarse = True
            warnings.warn(f"reduced FD grid too coarse: refinement change {change:.3g}", RuntimeWarning, stacklevel=2)
    return ReducedSpectrum(float(epsilon), float(d), Lam, small_lambda(Lam, geom), left, right,
                           grid_points, change, coarse)


def reduced_crossings(lam: float, geom: CuspGeometry, eps_min: float, eps_max: float,
                      end_left: EndBC | str = EndBC.DIRICHLET, d: float | None = None) -> np.ndarray:
    """All ``eps`` in ``[eps_min, eps_max]`` at which ``lam`` is an eigenvalue of the reduced model.

    The right end is Dirichlet at ``z = d``. Returned in decreasing order.
    """
    d = geom.d if d is None else d
    theta = reduced_theta(lam, geom, d)
    t = tau0(lam, geom)
    end = "neumann" if EndBC(end_left) is EndBC.NEUMANN else "dirichlet"
    # index range that covers [eps_min, eps_max] generously, then filter
    k_lo = math.floor(-2.0 * t * math.log(eps_max) / (2 * math.pi)) - 2
    k_hi = math.ceil(-2.0 * t * math.log(eps_min) / (2 * math.pi)) + 2
    eps = crossing_epsilons(lam, theta, range(k_lo, k_hi + 1), geom, end)
    eps = eps[(eps >= eps_min) & (eps <= eps_max) & (eps < d)]
    return np.sort(eps)[::-1]


def reduced_branch(k: int, eps, d: float, geom: CuspGeometry) -> np.ndarray:
    """lambda_k(eps) of the closed form, vectorized over ``eps``."""
    eps = np.asarray(eps, dtype=float)
    Lam = half_order(geom) ** 2 + (k * math.pi / np.log(d / eps)) ** 2
    return small_lambda(Lam, geom)


def reduced_gliding_slope(lam, epsilon, d: float, geom: CuspGeometry):
    """Exact ``d lambda / d eps`` along a closed-form branch: ``2 (lam - lam_dagger) / (eps ln(d/eps))``."""
    return 2.0 * (np.asarray(lam) - threshold(geom)) / (epsilon * np.log(d / epsilon))


def reduced_profile(z, lam: float, epsilon: float, geom: CuspGeometry) -> np.ndarray:
    """Solution vanishing at ``eps``: ``z**-(n-3/2) sin(tau0 ln(z / eps))``."""
    z = np.asarray(z, dtype=float)
    return z ** (-half_order(geom)) * np.sin(tau0(lam, geom) * np.log(z / epsilon))
