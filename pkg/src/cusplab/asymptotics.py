"""Closed-form asymptotic quantities for the blunted cusp.

Every function takes the geometry and works for general dimension ``n``;
only the meshing and the finite-element code are restricted to ``n = 2``.

Phase convention: a phase ``theta`` is the argument of ``b_plus / b_minus``
for the cusp profile ``b_plus z**tau_plus + b_minus z**tau_minus``. It is
reported in ``[0, 2*pi)``; :func:`wrap_phase` is the one place that wraps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .geometry import CuspGeometry, EndCondition

TWO_PI = 2.0 * math.pi


class BelowThresholdError(ValueError):
    """The requested quantity only exists above the continuous-spectrum threshold."""


def wrap_phase(theta):
    """Map angles into ``[0, 2*pi)``."""
    out = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # np.mod can return 2*pi exactly for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if out.ndim == 0 else out


def half_order(geom: CuspGeometry) -> float:
    """``n - 3/2``: minus the real part of both cusp exponents above the threshold."""
    return geom.n - 1.5


def spectral_ratio(geom: CuspGeometry) -> float:
    """``|d omega| / |omega|``, the factor taking lambda to Lambda."""
    return geom.omega_boundary_measure / geom.omega_measure


def big_lambda(lam, geom: CuspGeometry):
    """``Lambda = lam |d omega| / |omega|``."""
    return lam * spectral_ratio(geom)


def small_lambda(Lam, geom: CuspGeometry):
    return Lam / spectral_ratio(geom)


def threshold(geom: CuspGeometry) -> float:
    """Bottom of the continuous spectrum, ``(n - 3/2)**2 |omega| / |d omega|``."""
    return half_order(geom) ** 2 / spectral_ratio(geom)


def tau0(lam, geom: CuspGeometry):
    """Oscillation frequency of the cusp waves in ``ln z``."""
    arg = big_lambda(lam, geom) - half_order(geom) ** 2
    if np.any(np.asarray(arg) <= 0):
        raise BelowThresholdError(f"tau0 needs lambda > lambda_dagger = {threshold(geom):.17g}")
    return np.sqrt(arg) if np.ndim(arg) else math.sqrt(arg)


def period(lam, geom: CuspGeometry):
    """Log-period ``pi / tau0`` of the blinking pattern."""
    return math.pi / tau0(lam, geom)


def blinking_epsilons(lam: float, theta: float, k_range: Iterable[int], geom: CuspGeometry) -> np.ndarray:
    """Blunting sizes at which ``lam`` is (asymptotically) an eigenvalue.

    ``eps_k = exp(-(theta + (2k+1) pi) / (2 tau0))``: the solutions of
    ``-2 tau0 ln eps = theta + pi (mod 2 pi)``. ``theta`` is not wrapped, so
    ``theta + 2 pi`` reproduces the sequence shifted by one index.
    """
    t = tau0(lam, geom)
    k = np.asarray(list(k_range), dtype=float)
    return np.exp(-(float(theta) + (2.0 * k + 1.0) * math.pi) / (2.0 * t))


def blinking_epsilons_as_printed(lam: float, theta: float, k_range: Iterable[int], geom: CuspGeometry) -> np.ndarray:
    """The alternative closed form with prefactor ``2 / tau0``.

    It does not solve the crossing condition; kept only so reports can show
    how far it is from :func:`blinking_epsilons`.
    """
    t = tau0(lam, geom)
    k = np.asarray(list(k_range), dtype=float)
    return np.exp(-2.0 / t * ((2.0 * k + 1.0) * math.pi + float(theta)))


def crossing_phase(epsilon: float, lam: float, geom: CuspGeometry) -> float:
    """``(-2 tau0 ln eps - pi) mod 2 pi``: the phase that makes ``eps`` a crossing of ``lam``."""
    return wrap_phase(-2.0 * tau0(lam, geom) * math.log(epsilon) - math.pi)


def _check_eps(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return epsilon


def gliding_speed(lam, epsilon, geom: CuspGeometry):
    """Leading-order slope ``d lambda / d eps = 2 (lam - lam_dagger) / (eps |ln eps|)``."""
    epsilon = _check_eps(epsilon)
    gap = np.asarray(lam, dtype=float) - threshold(geom)
    if np.any(gap < -1e-15):
        raise BelowThresholdError("gliding speed is defined for lambda >= lambda_dagger")
    out = 2.0 * np.maximum(gap, 0.0) / (epsilon * abs(math.log(epsilon)))
    return float(out) if out.ndim == 0 else out


def gliding_speed_implicit(lam: float, epsilon: float, geom: CuspGeometry, dtheta_dlam: float = 0.0) -> float:
    """Slope of a crossing curve from implicit differentiation of the crossing condition.

    ``F(lam, eps) = -2 tau0(lam) ln eps - theta(lam)`` is constant along a
    branch, so ``d lam / d eps = -F_eps / F_lam``. With ``dtheta_dlam = 0``
    this reduces to :func:`gliding_speed`.
    """
    epsilon = _check_eps(epsilon)
    t = tau0(lam, geom)
    dtau = spectral_ratio(geom) / (2.0 * t)
    F_eps = -2.0 * t / epsilon
    F_lam = -2.0 * dtau * math.log(epsilon) - dtheta_dlam
    return -F_eps / F_lam


def threshold_phase(epsilon: float) -> complex:
    """``exp(i theta)`` at the threshold, ``-(1 - i ln eps) / (1 + i ln eps)``."""
    L = math.log(_check_eps(epsilon))
    return complex(-(1.0 - 1j * L) / (1.0 + 1j * L))


def normalization_w0(lam: float, geom: CuspGeometry, variant: str = "literal") -> float:
    """Normalization factor of the cusp waves ``w_pm = w0 z**tau_pm``.

    ``variant="literal"`` uses the base ``Lambda - n + 3/2`` in the power
    ``-1/4``; ``variant="tau0"`` uses ``Lambda - (n - 3/2)**2 = tau0**2``,
    which makes ``|omega| z**(2n-2) (w_plus w_minus' - w_plus' w_minus)``
    equal ``-i`` (a unit Wronskian). Both give ``(2|omega|)**-1/2``
    at the threshold.
    """
    lam_d = threshold(geom)
    if lam < lam_d * (1 - 1e-14):
        raise BelowThresholdError("w0 is defined for lambda >= lambda_dagger")
    base = 1.0 / math.sqrt(2.0 * geom.omega_measure)
    if abs(lam - lam_d) <= 1e-14 * max(1.0, lam_d):
        return base
    Lam = big_lambda(lam, geom)
    if variant == "literal":
        q = Lam - geom.n + 1.5
    elif variant == "tau0":
        q = Lam - half_order(geom) ** 2
    else:
        raise ValueError(f"unknown w0 variant {variant!r}")
    if q <= 0:
        raise BelowThresholdError(f"w0 ({variant}) needs a positive base, got {q:.17g} at lambda={lam:.17g}")
    return base * q ** -0.25


def end_phase_shift(lam: float, geom: CuspGeometry, end: EndCondition | str = EndCondition.NEUMANN) -> float:
    """Extra phase in the crossing condition caused by the end condition.

    Zero for a Dirichlet end. For Neumann (and, to leading order, Steklov)
    ends ``exp(i vartheta) = (nu - i tau0) / (nu + i tau0)`` with
    ``nu = n - 3/2``; returned in ``(-pi, pi]``.
    """
    end = EndCondition(end)
    if end is EndCondition.DIRICHLET:
        return 0.0
    nu = half_order(geom)
    t = tau0(lam, geom)
    return float(np.angle((nu - 1j * t) / (nu + 1j * t)))


def crossing_epsilons(lam: float, theta: float, k_range: Iterable[int], geom: CuspGeometry,
                      end: EndCondition | str = EndCondition.DIRICHLET) -> np.ndarray:
    """:func:`blinking_epsilons` generalized to all end conditions."""
    return blinking_epsilons(lam, float(theta) + end_phase_shift(lam, geom, end), k_range, geom)


@dataclass
class Prediction:
    lambda_dagger: float
    tau0: Callable[[float], float]
    w0: float
    theta: float | None
    epsilon_sequence: list = field(default_factory=list)
    gliding_speed: Callable[[float, float], float] | None = None
    lambda_flat: float | None = None
    theta_estimated: bool = False
    geom_hash: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "lambda_dagger": self.lambda_dagger,
            "w0": self.w0,
            "theta": self.theta,
            "theta_estimated": self.theta_estimated,
            "lambda_flat": self.lambda_flat,
            "epsilon_sequence": [float(e) for e in self.epsilon_sequence],
            "geom_hash": self.geom_hash,
        }
        if self.lambda_flat is not None and self.lambda_flat > self.lambda_dagger:
            out["tau0"] = self.tau0(self.lambda_flat)
            out["period_ln_eps"] = math.pi / out["tau0"]
        out.update(self.extra)
        return out


def predict(geom: CuspGeometry, lambda_flat: float | None = None, theta: float | None = None,
            k_range: Iterable[int] = range(0, 6), w0_variant: str = "literal") -> Prediction:
    """Bundle the closed-form predictions for one geometry and, optionally, one ``lambda_flat``.

    Without ``theta`` the reduced-model phase ``-2 tau0 ln d - pi`` is used
    and marked as estimated.
    """
    lam_d = threshold(geom)
    estimated = False
    seq: list = []
    extra: dict = {}
    w0 = normalization_w0(lam_d, geom)
    if lambda_flat is not None:
        t = tau0(lambda_flat, geom)
        if theta is None:
            theta = wrap_phase(-2.0 * t * math.log(geom.d) - math.pi)
            estimated = True
        k_range = list(k_range)
        seq = list(crossing_epsilons(lambda_flat, theta, k_range, geom, geom.end_condition))
        extra["epsilon_sequence_as_printed"] = [float(e) for e in blinking_epsilons_as_printed(lambda_flat, theta, k_range, geom)]
        extra["end_phase_shift"] = end_phase_shift(lambda_flat, geom, geom.end_condition)
        try:
            w0 = normalization_w0(lambda_flat, geom, w0_variant)
        except BelowThresholdError as exc:
            extra["w0_note"] = str(exc)
            w0 = float("nan")
    return Prediction(
        lambda_dagger=lam_d,
        tau0=lambda lam: tau0(lam, geom),
        w0=w0,
        theta=theta,
        epsilon_sequence=seq,
        gliding_speed=lambda lam, eps: gliding_speed(lam, eps, geom),
        lambda_flat=lambda_flat,
        theta_estimated=estimated,
        geom_hash=geom.geom_hash(),
        extra=extra,
    )
