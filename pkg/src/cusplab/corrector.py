"""Cross-section corrector and the boundary layer at the blunted end (planar case).

In the stretched variable ``eta = y / z**2`` the cusp cross-section is
``omega = (-a, a)``. For a power wave ``w = w0 z**tau`` the corrector
``W = z**(tau + 2) W0(eta)`` solves a Neumann problem on ``omega`` with
constant data, so ``W0`` is a quadratic polynomial.

Near the end ``z = eps`` the leading terms leave a discrepancy that is
removed by a boundary layer: a harmonic function on the half-strip
``omega x (0, inf)`` with Neumann walls, given Dirichlet data at the bottom
and decaying at infinity. It is a cosine series with rates ``k pi / (2a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .assembly import stiffness_matrix
from .geometry import CuspGeometry, Mesh, rectangle_mesh
from .reduced_model import euler_exponents

COMPATIBILITY_TOL = 1e-9


class CompatibilityError(ArithmeticError):
    """The Neumann data of the corrector problem are not compatible."""


class NonzeroMeanError(ValueError):
    """Boundary-layer data with nonzero mean: the constant mode would not decay."""


@dataclass(frozen=True)
class CorrectorSolution:
    lam: float
    tau: complex
    a: float
    w0: float
    F: complex
    G: complex
    coefficients: tuple  # (c0, c1, c2): W0 = c0 + c1 eta + c2 eta**2
    compatibility_residual: float

    def __call__(self, eta):
        c0, c1, c2 = self.coefficients
        eta = np.asarray(eta, dtype=float)
        return c0 + c1 * eta + c2 * eta**2

    def derivative(self, eta):
        _, c1, c2 = self.coefficients
        return c1 + 2.0 * c2 * np.asarray(eta, dtype=float)

    @property
    def mean(self) -> complex:
        c0, _, c2 = self.coefficients
        return c0 + c2 * self.a**2 / 3.0

    def neumann_residual(self) -> float:
        """``max |d_nu W0 - G|`` over the two endpoints ``eta = +-a``."""
        r_plus = self.derivative(self.a) - self.G
        r_minus = -self.derivative(-self.a) - self.G
        return float(max(abs(r_plus), abs(r_minus)))


def corrector_data(lam: float, tau: complex, a: float, w0: float = 1.0) -> tuple[complex, complex]:
    """``(F, G)`` for ``w = w0 z**tau``: ``F = tau (tau - 1) w0`` and ``G = (lam + 2 a tau) w0``.

    ``G`` uses ``eta . nu' = a`` at both endpoints of ``(-a, a)``.
    """
    return tau * (tau - 1.0) * w0, (lam + 2.0 * a * tau) * w0


def compatibility_residual(lam: float, tau: complex, geom: CuspGeometry, w0: float = 1.0) -> complex:
    """``int_omega F + int_{d omega} G`` for ``w = w0 z**tau`` in general dimension.

    The divergence theorem gives ``int_{d omega} eta . nu' = (n - 1) |omega|``,
    so the residual is ``w0 (|omega| (tau**2 + (2n - 3) tau) + lam |d omega|)``,
    which vanishes exactly at the Euler exponents.
    """
    om, bd = geom.omega_measure, geom.omega_boundary_measure
    return w0 * (om * tau * (tau - 1.0) + lam * bd + 2.0 * (geom.n - 1) * om * tau)


def solve_W0(lam: float, geom: CuspGeometry, branch: str = "+", w0: float = 1.0, tau: complex | None = None) -> CorrectorSolution:
    """Mean-zero solution of ``-W0'' = F`` on ``(-a, a)`` with ``+-W0'(+-a) = G``.

    ``tau`` defaults to the Euler exponent of the requested ``branch``;
    any other ``tau`` fails the compatibility check.
    """
    if geom.n != 2:
        raise NotImplementedError("closed-form corrector is implemented for n = 2")
    if tau is None:
        tp, tm = euler_exponents(lam, geom)
        tau = {"+": tp, "-": tm}[branch]
    tau = complex(tau)
    a = geom.a
    F, G = corrector_data(lam, tau, a, w0)
    res = abs(2.0 * a * F + 2.0 * G) / max(1.0, abs(F) * a, abs(G))
    if res > COMPATIBILITY_TOL:
        raise CompatibilityError(f"Neumann data incompatible (residual {res:.3g}); tau is not an Euler exponent")
    # W0 = -F/2 (eta**2 - a**2/3); the linear term vanishes by symmetry of the data
    coeffs = (F * a * a / 6.0, 0.0 * F, -F / 2.0)
    return CorrectorSolution(float(lam), tau, a, float(w0), F, G, coeffs, float(res))


def solve_W0_fd(F: complex, G: complex, a: float, points: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    """P1 finite-element oracle for the same Neumann problem, mean fixed by a multiplier."""
    eta = np.linspace(-a, a, points)
    h = eta[1] - eta[0]
    n = points
    main = np.full(n, 2.0 / h)
    main[[0, -1]] = 1.0 / h
    K = sp.diags([main, np.full(n - 1, -1.0 / h), np.full(n - 1, -1.0 / h)], [0, 1, -1])
    mass_row = np.full(n, h)
    mass_row[[0, -1]] = h / 2.0
    load = F * mass_row.astype(complex)
    load[0] += G
    load[-1] += G
    B = sp.bmat([[K, sp.csr_matrix(mass_row[:, None])], [sp.csr_matrix(mass_row[None, :]), None]]).tocsc()
    rhs = np.concatenate([load, [0.0]])
    sol = spsolve(B.astype(complex), rhs)
    return eta, sol[:n]


# ---------------------------------------------------------------------------
# boundary layer on the half-strip
# ---------------------------------------------------------------------------


@dataclass
class BoundaryLayerSolution:
    a: float
    modes: list  # (frequency k pi / (2a), amplitude c_k) for k = 1..N
    decay_rate: float
    truncation_length: float
    mean_flux: float  # amplitude of the constant mode; zero for admissible data
    tail_bound: float
    extra: dict = field(default_factory=dict)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m[0] for m in self.modes])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([m[1] for m in self.modes])

    def _terms(self, xi_p, xi_n):
        xi_p = np.asarray(xi_p, dtype=float)
        xi_n = np.asarray(xi_n, dtype=float)
        k = self.frequencies
        return xi_p[..., None], xi_n[..., None], k, self.amplitudes

    def __call__(self, xi_p, xi_n):
        x, t, k, c = self._terms(xi_p, xi_n)
        return np.sum(c * np.cos(k * (x + self.a)) * np.exp(-k * t), axis=-1)

    def gradient(self, xi_p, xi_n):
        x, t, k, c = self._terms(xi_p, xi_n)
        e = c * np.exp(-k * t)
        return (np.sum(-k * e * np.sin(k * (x + self.a)), axis=-1),
                np.sum(-k * e * np.cos(k * (x + self.a)), axis=-1))

    def hessian_norm2(self, xi_p, xi_n):
        """``|Hess Y|**2 = Y_11**2 + 2 Y_12**2 + Y_22**2``."""
        x, t, k, c = self._terms(xi_p, xi_n)
        e = c * k * k * np.exp(-k * t)
        cos_ = np.cos(k * (x + self.a))
        sin_ = np.sin(k * (x + self.a))
        y11 = np.sum(-e * cos_, axis=-1)
        y12 = np.sum(e * sin_, axis=-1)
        y22 = np.sum(e * cos_, axis=-1)
        return y11**2 + 2 * y12**2 + y22**2

    def laplacian(self, xi_p, xi_n):
        """Term-wise ``Y_11 + Y_22``; each mode decays at its own lateral frequency."""
        x, t, k, c = self._terms(xi_p, xi_n)
        e = c * np.exp(-k * t) * np.cos(k * (x + self.a))
        return np.sum(-k * k * e + k * k * e, axis=-1)

    def section_mean(self, xi_n, nq: int = 400) -> np.ndarray:
        x, w = np.polynomial.legendre.leggauss(nq)
        eta = self.a * x
        vals = self([[e] for e in eta], np.atleast_1d(xi_n)[None, :])
        return (w * self.a) @ vals / (2 * self.a)

    def section_norm(self, xi_n) -> np.ndarray:
        """``L2(omega)`` norm of ``Y(., xi_n)`` from Parseval."""
        xi_n = np.atleast_1d(np.asarray(xi_n, dtype=float))
        k, c = self.frequencies, self.amplitudes
        return np.sqrt(self.a * np.sum((c * np.exp(-k * xi_n[:, None])) ** 2, axis=1))

    def fitted_decay_rate(self, xi_range: tuple[float, float], samples: int = 50) -> float:
        """Slope of ``-ln ||Y(., xi_n)||`` fitted over ``xi_range``."""
        t = np.linspace(*xi_range, samples)
        slope = np.polyfit(t, np.log(self.section_norm(t)), 1)[0]
        return float(-slope)

    def weighted_h2_integral(self, T: float, beta: float | None = None, nx: int = 64, nt: int = 400) -> float:
        """Quadrature of ``int e^(2 beta xi_n) (|Hess Y|**2 + |grad Y|**2)`` over ``omega x (0, T)``."""
        beta = self.decay_rate if beta is None else beta
        x, wx = np.polynomial.legendre.leggauss(nx)
        t, wt = np.polynomial.legendre.leggauss(nt)
        eta = self.a * x
        xi = 0.5 * T * (t + 1.0)
        E, Xi = np.meshgrid(eta, xi, indexing="ij")
        gy, gz = self.gradient(E, Xi)
        f = np.exp(2 * beta * Xi) * (self.hessian_norm2(E, Xi) + gy**2 + gz**2)
        return float((wx * self.a) @ f @ (wt * 0.5 * T))


def _cosine_coefficients(data: Callable, a: float, n_modes: int, nq: int):
    x, w = np.polynomial.legendre.leggauss(nq)
    eta = a * x
    wq = w * a
    vals = np.asarray(data(eta), dtype=float)
    c0 = float(wq @ vals) / (2 * a)
    k = np.arange(1, n_modes + 1)
    freq = k * math.pi / (2 * a)
    basis = np.cos(freq[:, None] * (eta[None, :] + a))
    ck = basis @ (wq * vals) / a
    scale = math.sqrt(float(wq @ vals**2) / (2 * a))
    return c0, freq, ck, scale


def solve_boundary_layer(dirichlet_data: Callable, a: float, n_modes: int = 200, T: float | None = None,
                         mean_tol: float = 1e-10, quad_points: int | None = None) -> BoundaryLayerSolution:
    """Cosine-series solution of the half-strip problem with Neumann walls.

    ``Y(xi', xi_n) = sum_k c_k cos(k pi (xi' + a) / (2a)) exp(-k pi xi_n / (2a))``.
    Raises :class:`NonzeroMeanError` when the data has a nonzero mean.
    """
    if a <= 0 or n_modes < 1:
        raise ValueError("need a > 0 and n_modes >= 1")
    nq = quad_points or max(256, 4 * n_modes)
    c0, freq, ck, scale = _cosine_coefficients(dirichlet_data, a, n_modes, nq)
    if abs(c0) > mean_tol * max(1.0, scale):
        raise NonzeroMeanError(f"data mean {c0:.3g} is not zero; the constant mode would not decay")
    beta = math.pi / (2 * a)
    T = 10.0 * a if T is None else float(T)
    q = math.exp(-beta * T)
    # tail estimate: last retained amplitude continued as a geometric series
    tail = abs(ck[-1]) * q ** (n_modes + 1) / (1.0 - q) if q < 1 else float("inf")
    modes = [(float(f), float(c)) for f, c in zip(freq, ck)]
    return BoundaryLayerSolution(a, modes, beta, T, c0, float(tail))


def strip_fem(dirichlet_data: Callable, a: float, T: float, ny: int = 200, nz: int | None = None,
              top: str = "dirichlet") -> tuple[Mesh, np.ndarray]:
    """P1 solve of the truncated strip: data at ``xi_n = 0``, Neumann walls, zero Dirichlet (or Neumann) at ``T``.

    The mesh uses ``y`` for ``xi'`` and ``z`` for ``xi_n``.
    """
    nz = nz or int(round(ny * T / (2 * a)))
    mesh = rectangle_mesh(-a, a, 0.0, T, ny, nz)
    A = stiffness_matrix(mesh).tocsr()
    z = mesh.nodes[:, 1]
    bottom = np.flatnonzero(z == 0.0)
    fixed = [bottom]
    values = np.zeros(mesh.n_nodes)
    values[bottom] = dirichlet_data(mesh.nodes[bottom, 0])
    if top == "dirichlet":
        fixed.append(np.flatnonzero(z == T))
    fixed = np.concatenate(fixed)
    free = np.setdiff1d(np.arange(mesh.n_nodes), fixed)
    rhs = -A[free][:, fixed] @ values[fixed]
    values[free] = spsolve(A[free][:, free].tocsc(), rhs)
    return mesh, values
