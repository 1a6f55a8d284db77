"""Steklov eigenpairs through the discrete Dirichlet-to-Neumann map.

The free unknowns split into boundary nodes (the support of ``M_gamma``) and
interior nodes. Eliminating the interior with one sparse factorization gives
the dense Schur complement ``A_bb - A_bi A_ii^{-1} A_ib``, and the Steklov
eigenvalues are those of the pencil ``(DtN, M_bb)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import AssembledSystem, apply_S, energy_matrix

RESIDUAL_TOL = 1e-8


class EigensolveError(RuntimeError):
    pass


class LemmaHypothesisError(ValueError):
    """delta >= M: the near-eigenvalue lemma gives no conclusion."""


@dataclass(eq=False)
class Spectrum:
    epsilon: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (n_nodes, count), nodal values on sys.mesh, M_gamma-orthonormal
    residuals: np.ndarray
    end_condition: str
    odd_sector: bool
    sector: str = "full"
    mesh_id: str = ""
    mesh_file: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def mu(self) -> np.ndarray:
        return 1.0 / (1.0 + self.eigenvalues)

    def to_json(self) -> str:
        doc = {
            "epsilon": self.epsilon,
            "end_condition": self.end_condition,
            "odd_sector": self.odd_sector,
            "sector": self.sector,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residuals": [float(v) for v in self.residuals],
            "mesh_id": self.mesh_id,
            "mesh_file": self.mesh_file,
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def _fix_signs(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    sign = np.sign(V[idx, np.arange(V.shape[1])])
    sign[sign == 0] = 1.0
    return V * sign


def dtn_blocks(sys: AssembledSystem):
    """Boundary/interior split of the free unknowns and the dense DtN matrix."""
    A = sys.A_free.tocsr()
    M = sys.M_free.tocsr()
    on_b = np.asarray(abs(M).sum(axis=1)).ravel() > 0
    b = np.flatnonzero(on_b)
    i = np.flatnonzero(~on_b)
    A_bb = A[b][:, b].toarray()
    M_bb = M[b][:, b].toarray()
    A_ib = A[i][:, b].tocsc()
    lu = None
    if len(i):
        try:
            # A_ii is SPD: symmetric ordering with diagonal pivots keeps the fill low
            lu = splu(
                A[i][:, i].tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise EigensolveError(f"interior factorization failed: {exc}") from exc
        # A_bi A_ii^{-1} A_ib in column blocks to bound memory
        S = A_bb.copy()
        A_bi = A_ib.T.tocsr()
        block = 256
        for start in range(0, len(b), block):
            cols = slice(start, min(start + block, len(b)))
            X = lu.solve(A_ib[:, cols].toarray())
            S[:, cols] -= A_bi @ X
        A_bb = 0.5 * (S + S.T)
    return b, i, A_bb, M_bb, A_ib, lu


def steklov_spectrum(sys: AssembledSystem, count: int, mesh_id: str = "") -> Spectrum:
    """The first ``count`` Steklov eigenpairs of the assembled system."""
    b, i, D, M_bb, A_ib, lu = dtn_blocks(sys)
    if count > len(b):
        raise ValueError(f"count={count} exceeds the {len(b)} boundary unknowns")
    try:
        # Cholesky congruence M_bb = L L^T reduces to a standard symmetric problem
        L = sla.cholesky(M_bb, lower=True)
        C = sla.solve_triangular(L, sla.solve_triangular(L, D, lower=True).T, lower=True)
        C = 0.5 * (C + C.T)
        lam, Y = sla.eigh(C, subset_by_index=[0, count - 1], driver="evr")
        Wb = sla.solve_triangular(L.T, Y, lower=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolveError(f"dense symmetric eigensolver failed: {exc}") from exc

    W = np.zeros((sys.n_free, count))
    W[b] = Wb
    if len(i):
        W[i] = -lu.solve(A_ib @ Wb)
    W = _fix_signs(W)

    A, M = sys.A_free, sys.M_free
    R = A @ W - (M @ W) * lam
    den = np.linalg.norm((A + M) @ W, axis=0)
    residuals = np.linalg.norm(R, axis=0) / den
    if lam[0] < 0 and sys.constrained.size:
        raise EigensolveError("negative eigenvalue with constraints present; broken mesh or constraints")
    if not sys.constrained.size:
        lam = np.where(np.abs(lam) < 1e-12 * max(1.0, abs(lam[-1])), 0.0, lam)
    return Spectrum(
        epsilon=float(sys.mesh.epsilon),
        eigenvalues=lam,
        eigenvectors=sys.expand(W),
        residuals=residuals,
        end_condition=sys.end_condition.value,
        odd_sector=sys.odd_sector,
        sector=sys.sector,
        mesh_id=mesh_id or sys.mesh.digest(),
    )


def full_pencil_spectrum(sys: AssembledSystem) -> np.ndarray:
    """Brute-force oracle: finite eigenvalues of the dense pencil ``A w = lam M w``.

    Works through the operator S, whose nonzero eigenvalues mu = 1/(1+lam)
    correspond one-to-one to the finite Steklov eigenvalues.
    """
    mu = s_operator_spectrum(sys)
    rank = np.linalg.matrix_rank(sys.M_free.toarray())
    mu = np.sort(mu)[::-1][:rank]
    return np.sort(1.0 / mu - 1.0)


def s_operator_spectrum(sys: AssembledSystem) -> np.ndarray:
    """All eigenvalues of S in the energy inner product, dense: ``M w = mu (A+M) w``."""
    K = energy_matrix(sys).toarray()
    M = sys.M_free.toarray()
    return sla.eigh(M, K, eigvals_only=True)


@dataclass(frozen=True)
class NearEigenvalueResult:
    delta: float
    M: float
    matched_mu: float | None
    lam_bound_holds: bool | None

    @property
    def contained(self) -> bool:
        return self.matched_mu is not None and abs(self.M - self.matched_mu) <= self.delta * (1 + 1e-12) + 1e-15


def near_eigenvalue_check(sys: AssembledSystem, U: np.ndarray, M: float, mu_all: np.ndarray | None = None) -> NearEigenvalueResult:
    """Residual ``delta = ||S U - M U||_eps`` for unit ``U`` and the nearest eigenvalue of S.

    Raises :class:`LemmaHypothesisError` when ``delta >= M``. When
    ``delta / M <= 1/2`` it also checks the lambda-form bound
    ``|1 + lam_p - 1/M| <= 2 delta / M**2``.
    """
    if not 0 < M < 1:
        raise ValueError("M must lie in (0, 1)")
    K = energy_matrix(sys)
    U = np.asarray(U, dtype=float)
    U = U / np.sqrt(U @ (K @ U))
    r = apply_S(sys, U, solver=splu(K)) - M * U
    delta = float(np.sqrt(max(r @ (K @ r), 0.0)))
    if delta >= M:
        raise LemmaHypothesisError(f"delta={delta:.3g} >= M={M:.3g}")
    if mu_all is None:
        mu_all = s_operator_spectrum(sys)
    mu_p = float(mu_all[np.argmin(np.abs(mu_all - M))])
    lam_ok = None
    if delta / M <= 0.5:
        lam_p = 1.0 / mu_p - 1.0 if mu_p > 0 else np.inf
        lam_ok = bool(abs(1 + lam_p - 1 / M) <= 2 * delta / M**2 * (1 + 1e-12))
    return NearEigenvalueResult(delta, float(M), mu_p, lam_ok)
