"""P1 stiffness and boundary-mass assembly for the Steklov problem on a blunted cusp."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import TAG_END, TAG_STEKLOV, TAG_SYMMETRY, EndCondition, Mesh, MeshError


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Sparse matrices over all mesh nodes plus the bookkeeping of eliminated nodes.

    ``A`` and ``M_gamma`` are full node-level matrices; ``free`` lists the
    nodes that carry unknowns. Use :meth:`restrict` for the free blocks.
    """

    mesh: Mesh
    A: sp.csr_matrix
    M_gamma: sp.csr_matrix
    M_end: sp.csr_matrix
    constrained: np.ndarray
    free: np.ndarray
    end_condition: EndCondition
    odd_sector: bool
    even_sector: bool = False

    @property
    def sector(self) -> str:
        return "odd" if self.odd_sector else "even" if self.even_sector else "full"

    @property
    def n_free(self) -> int:
        return len(self.free)

    @property
    def free_map(self) -> np.ndarray:
        """node index -> equation index (-1 for constrained nodes)."""
        out = -np.ones(self.mesh.n_nodes, dtype=np.int64)
        out[self.free] = np.arange(len(self.free))
        return out

    def restrict(self, M: sp.spmatrix) -> sp.csr_matrix:
        return M[self.free][:, self.free].tocsr()

    @property
    def A_free(self) -> sp.csr_matrix:
        return self.restrict(self.A)

    @property
    def M_free(self) -> sp.csr_matrix:
        return self.restrict(self.M_gamma)

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        """Free vector(s) -> nodal vector(s) with zeros at constrained nodes."""
        u_free = np.asarray(u_free)
        out = np.zeros((self.mesh.n_nodes,) + u_free.shape[1:], dtype=u_free.dtype)
        out[self.free] = u_free
        return out

    def dump_coo(self, which: str, path: str | Path) -> None:
        """Write ``row col value`` lines (0-based, sorted) of the free block of A / M_gamma / M_end."""
        M = self.restrict({"A": self.A, "M_gamma": self.M_gamma, "M_end": self.M_end}[which]).tocoo()
        order = np.lexsort((M.col, M.row))
        with open(path, "w") as fh:
            for r, c, v in zip(M.row[order], M.col[order], M.data[order]):
                fh.write(f"{r} {c} {v:.17g}\n")


def element_stiffness(p: np.ndarray) -> np.ndarray:
    """P1 stiffness of triangles ``p`` with shape (T, 3, 2); returns (T, 3, 3)."""
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area2 = e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0])
    return np.einsum("tik,tjk->tij", e, e) / (2.0 * area2)[:, None, None]


def edge_mass(lengths: np.ndarray) -> np.ndarray:
    """Exact P1 mass of boundary edges, shape (B, 2, 2)."""
    base = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    return lengths[:, None, None] * base


def stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    K = element_stiffness(mesh.nodes[mesh.triangles])
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    A = sp.coo_matrix((K.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()
    return _symmetrize(A)


def boundary_mass(mesh: Mesh, tags) -> sp.csr_matrix:
    edges = mesh.boundary_edges[np.isin(mesh.edge_tags, list(tags))]
    L = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    Me = edge_mass(L)
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(mesh.n_nodes,) * 2).tocsr()
    return _symmetrize(M)


def _symmetrize(M: sp.csr_matrix) -> sp.csr_matrix:
    # summation order can differ between (i,j) and (j,i); average to get exact symmetry
    M = 0.5 * (M + M.T)
    M.sum_duplicates()
    M.sort_indices()
    return M.tocsr()


def assemble(
    mesh: Mesh,
    end_condition=EndCondition.DIRICHLET,
    odd_sector: bool = False,
    even_sector: bool = False,
) -> AssembledSystem:
    """Assemble the Steklov pencil ``(A, M_gamma)`` with the requested end condition.

    ``odd_sector`` solves on the ``y >= 0`` half with ``u = 0`` on the symmetry
    plane, i.e. the odd part of the spectrum of a mirror-symmetric domain.
    ``even_sector`` leaves the symmetry plane free (natural Neumann condition),
    which gives the even part. Together they make up the full spectrum.
    """
    end_condition = EndCondition(end_condition)
    if odd_sector and even_sector:
        raise ValueError("odd_sector and even_sector are exclusive")
    if odd_sector or even_sector:
        if not np.any(mesh.edge_tags == TAG_SYMMETRY):
            if not mesh.is_mirror_symmetric():
                raise MeshError("sector solves require a mirror-symmetric mesh")
            mesh = mesh.half()
    A = stiffness_matrix(mesh)
    steklov_tags = [TAG_STEKLOV]
    if end_condition is EndCondition.STEKLOV:
        steklov_tags.append(TAG_END)
    M = boundary_mass(mesh, steklov_tags)
    M_end = boundary_mass(mesh, [TAG_END])

    constrained = []
    if end_condition is EndCondition.DIRICHLET:
        constrained.append(mesh.tag_nodes(TAG_END))
    if odd_sector:
        constrained.append(mesh.tag_nodes(TAG_SYMMETRY))
    constrained = np.unique(np.concatenate(constrained)) if constrained else np.zeros(0, np.int64)
    free = np.setdiff1d(np.arange(mesh.n_nodes), constrained)
    return AssembledSystem(
        mesh, A, M, M_end, constrained.astype(np.int64), free, end_condition, bool(odd_sector), bool(even_sector)
    )


def energy_matrix(sys: AssembledSystem) -> sp.csr_matrix:
    """Free block of ``A + M_gamma``: the Gram matrix of the energy inner product."""
    return (sys.A_free + sys.M_free).tocsc()


def discrete_inner_product(sys: AssembledSystem, u: np.ndarray, v: np.ndarray) -> float:
    """``<u, v>_eps = u^T (A + M_gamma) v`` over free unknowns."""
    u, v = _check(sys, u), _check(sys, v)
    return float(u @ (energy_matrix(sys) @ v))


def apply_S(sys: AssembledSystem, u: np.ndarray, solver=None) -> np.ndarray:
    """The discrete operator S: solve ``(A + M_gamma) w = M_gamma u``."""
    u = _check(sys, u)
    if solver is None:
        solver = splu(energy_matrix(sys))
    return solver.solve(sys.M_free @ u)


def _check(sys: AssembledSystem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[0] != sys.n_free:
        raise ValueError(f"vector has {u.shape[0]} entries, system has {sys.n_free} free unknowns")
    return u
