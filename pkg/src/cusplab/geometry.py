"""Blunted power-cusp domains and their graded triangular meshes.

Coordinates are ``(y, z)``: ``z`` runs along the cusp axis with the tip at the
origin, ``y`` is transversal. The cusp occupies ``|y| < a z**2`` for
``z < d``; above ``z = d`` a polynomial blend joins it with continuous tangent
to a rounded body (half disk or stadium).

Meshing strategy
----------------
The neck ``eps <= z <= d/4`` is meshed with structured rows whose spacing
follows the local width, so the width ``2 a z**2`` is always resolved by at
least ``n_across`` elements. The body ``z >= d/4`` is meshed once per
``(geometry, h, grading)`` with Triangle and cached, so meshes for different
``eps`` share the body triangulation node for node. That keeps eigenvalue
differences between blunting levels free of body discretization noise.
"""
from __future__ import annotations

import enum
import functools
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import triangle
from scipy import integrate
from scipy.special import gamma

TAG_STEKLOV = "S"
TAG_END = "E"
TAG_SYMMETRY = "Y"
TAGS = (TAG_STEKLOV, TAG_END, TAG_SYMMETRY)

MIN_ANGLE_DEG = 15.0


class MeshError(ValueError):
    """Raised when a mesh cannot satisfy its quality invariants."""


class EndCondition(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    STEKLOV = "steklov"


class BodyKind(str, enum.Enum):
    HALF_DISK = "half_disk"
    STADIUM = "stadium"


@dataclass(frozen=True)
class BodySpec:
    """Shape of the body the cusp is attached to.

    ``radius=None`` picks the radius that makes the blend length ``d/4``.
    ``join_smoothness`` is the degree k of the blend ``y = y0 + s0 L/k (1 - (1 - t/L)**k)``.
    """

    kind: BodyKind = BodyKind.HALF_DISK
    radius: float | None = None
    join_smoothness: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", BodyKind(self.kind))
        if self.join_smoothness < 2:
            raise ValueError("join_smoothness must be >= 2")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class CuspGeometry:
    a: float = 1.0
    d: float = 1.0
    n: int = 2
    body: BodySpec = field(default_factory=BodySpec)
    end_condition: EndCondition = EndCondition.DIRICHLET
    mirror_symmetric: bool = True

    def __post_init__(self):
        if not (self.a > 0 and self.d > 0):
            raise ValueError("a and d must be positive")
        if self.n < 2:
            raise ValueError("dimension n must be >= 2")
        object.__setattr__(self, "end_condition", EndCondition(self.end_condition))
        if isinstance(self.body, dict):
            object.__setattr__(self, "body", BodySpec(**self.body))

    # cross-section omega: interval (-a, a) for n = 2, ball of radius a in R^(n-1) otherwise
    @property
    def omega_measure(self) -> float:
        k = self.n - 1
        return math.pi ** (k / 2) / gamma(k / 2 + 1) * self.a**k

    @property
    def omega_boundary_measure(self) -> float:
        k = self.n - 1
        return k * self.omega_measure / self.a

    def profile(self, z):
        return self.a * np.asarray(z, dtype=float) ** 2

    # body dimensions ------------------------------------------------------
    @property
    def _slope_at_join(self) -> float:
        return 2.0 * self.a * self.d

    @property
    def body_radius(self) -> float:
        if self.body.radius is not None:
            return float(self.body.radius)
        k = self.body.join_smoothness
        return self.a * self.d**2 + self._slope_at_join * (self.d / 4) / k

    @property
    def blend_length(self) -> float:
        rise = self.body_radius - self.a * self.d**2
        if rise <= 0:
            raise ValueError("body radius must exceed the cusp half-width a*d**2")
        return self.body.join_smoothness * rise / self._slope_at_join

    @property
    def straight_length(self) -> float:
        return self.body_radius if self.body.kind is BodyKind.STADIUM else 0.0

    @property
    def cap_center(self) -> float:
        return self.d + self.blend_length + self.straight_length

    @property
    def z_top(self) -> float:
        return self.cap_center + self.body_radius

    def to_dict(self) -> dict:
        out = asdict(self)
        out["end_condition"] = self.end_condition.value
        out["body"]["kind"] = self.body.kind.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CuspGeometry":
        data = dict(data)
        if "body" in data and isinstance(data["body"], dict):
            data["body"] = BodySpec(**data["body"])
        return cls(**data)

    def geom_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# parametric boundary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """A boundary curve ``t -> (y, z)`` on ``[t0, t1]`` with derivative ``dpoint``."""

    name: str
    tag: str
    point: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    dpoint: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    t0: float
    t1: float

    def sample(self, t) -> np.ndarray:
        y, z = self.point(np.asarray(t, dtype=float))
        return np.column_stack([np.broadcast_to(y, np.shape(t)), np.broadcast_to(z, np.shape(t))])


@dataclass(frozen=True)
class Domain:
    """Counter-clockwise closed boundary of the blunted domain."""

    geom: CuspGeometry
    epsilon: float
    segments: tuple[Segment, ...]

    def area(self) -> float:
        """Exact area via Green's theorem, integrating ``y dz`` along each curve."""
        total = 0.0
        for seg in self.segments:
            def f(t, seg=seg):
                y, _ = seg.point(np.asarray(t))
                _, dz = seg.dpoint(np.asarray(t))
                return float(y * dz)
            val, _ = integrate.quad(f, seg.t0, seg.t1, epsabs=1e-14, epsrel=1e-13, limit=200)
            total += val
        return total

    def half_width(self, z):
        """Half-width ``Y(z)`` of the domain at height ``z``."""
        g = self.geom
        z = np.asarray(z, dtype=float)
        k = g.body.join_smoothness
        L = g.blend_length
        s0 = g._slope_at_join
        t = np.clip(z - g.d, 0.0, L)
        blend = g.a * g.d**2 + s0 * L / k * (1 - (1 - t / L) ** k)
        R = g.body_radius
        cap = np.sqrt(np.clip(R**2 - (z - g.cap_center) ** 2, 0.0, None))
        return np.where(
            z <= g.d,
            g.a * z**2,
            np.where(z <= g.d + L, blend, np.where(z <= g.cap_center, R, cap)),
        )

    def polyline(self, per_segment: int = 200) -> np.ndarray:
        pts = [seg.sample(np.linspace(seg.t0, seg.t1, per_segment)[:-1]) for seg in self.segments]
        return np.vstack(pts)


def _right_side_segments(g: CuspGeometry, eps: float) -> list[Segment]:
    a, d = g.a, g.d
    k = g.body.join_smoothness
    L = g.blend_length
    s0 = g._slope_at_join
    R = g.body_radius
    y0 = a * d**2
    segs = [
        Segment(
            "cusp_right",
            TAG_STEKLOV,
            lambda t: (a * t**2, t),
            lambda t: (2 * a * t, np.ones_like(t)),
            eps,
            d,
        ),
        Segment(
            "blend_right",
            TAG_STEKLOV,
            lambda t: (y0 + s0 * L / k * (1 - (1 - t / L) ** k), d + t),
            lambda t: (s0 * (1 - t / L) ** (k - 1), np.ones_like(t)),
            0.0,
            L,
        ),
    ]
    if g.straight_length > 0:
        z1 = d + L
        segs.append(
            Segment(
                "straight_right",
                TAG_STEKLOV,
                lambda t: (np.full_like(t, R), z1 + t),
                lambda t: (np.zeros_like(t), np.ones_like(t)),
                0.0,
                g.straight_length,
            )
        )
    zc = g.cap_center
    segs.append(
        Segment(
            "cap_right",
            TAG_STEKLOV,
            lambda t: (R * np.cos(t), zc + R * np.sin(t)),
            lambda t: (-R * np.sin(t), R * np.cos(t)),
            0.0,
            math.pi / 2,
        )
    )
    return segs


def _mirror_reversed(seg: Segment) -> Segment:
    """Mirror image under y -> -y, traversed backwards (keeps CCW orientation)."""
    t0, t1 = seg.t0, seg.t1

    def point(t, seg=seg):
        y, z = seg.point(t0 + t1 - t)
        return -y, z

    def dpoint(t, seg=seg):
        dy, dz = seg.dpoint(t0 + t1 - t)
        return dy, -dz

    return Segment(seg.name.replace("right", "left"), seg.tag, point, dpoint, t0, t1)


def make_domain(geom: CuspGeometry, epsilon: float) -> Domain:
    """Parametric boundary of the blunted domain, ordered counter-clockwise."""
    if not (0 < epsilon < geom.d / 4):
        raise ValueError(f"epsilon must lie in (0, d/4) = (0, {geom.d / 4}); got {epsilon}")
    ye = geom.a * epsilon**2
    end = Segment(
        "end",
        TAG_END,
        lambda t: (ye * t, np.full_like(t, epsilon)),
        lambda t: (np.full_like(t, ye), np.zeros_like(t)),
        -1.0,
        1.0,
    )
    right = _right_side_segments(geom, epsilon)
    left = [_mirror_reversed(s) for s in reversed(right)]
    return Domain(geom, float(epsilon), tuple([end, *right, *left]))


# ---------------------------------------------------------------------------
# mesh container
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (N, 2) columns (y, z)
    triangles: np.ndarray  # (T, 3), counter-clockwise
    boundary_edges: np.ndarray  # (B, 2)
    edge_tags: np.ndarray  # (B,) one of TAGS
    epsilon: float = float("nan")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def tag_edges(self, tag: str) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == tag]

    def tag_nodes(self, tag: str) -> np.ndarray:
        return np.unique(self.tag_edges(tag))

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def angles(self) -> np.ndarray:
        """Interior angles in degrees, shape (T, 3)."""
        p = self.nodes[self.triangles]
        out = np.empty(self.triangles.shape)
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            cos = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            out[:, i] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out

    def min_angle(self) -> float:
        return float(self.angles().min())

    def validate(self, min_angle: float = MIN_ANGLE_DEG) -> None:
        if np.any(self.triangle_areas() <= 0):
            raise MeshError("mesh has non-positively oriented triangles")
        edges, counts = _edge_counts(self.triangles)
        if np.any(counts > 2):
            raise MeshError("non-conforming mesh: an edge is shared by more than two triangles")
        bnd = {tuple(e) for e in edges[counts == 1]}
        tagged = {tuple(sorted(e)) for e in self.boundary_edges.tolist()}
        if bnd != tagged or len(tagged) != len(self.boundary_edges):
            raise MeshError("boundary tags do not cover the boundary exactly once")
        end = self.tag_nodes(TAG_END)
        if len(end) and np.any(self.nodes[end, 1] != self.epsilon):
            raise MeshError("artificial-end nodes off the line z = epsilon")
        amin = self.min_angle()
        if amin < min_angle:
            raise MeshError(f"minimum angle {amin:.2f} deg below {min_angle} deg (eps={self.epsilon})")

    def mirror_permutation(self) -> np.ndarray | None:
        """Index map i -> mirror(i) under y -> -y, or None when the node set is not symmetric."""
        lookup = {(float(y), float(z)): i for i, (y, z) in enumerate(self.nodes)}
        perm = np.empty(self.n_nodes, dtype=np.int64)
        for i, (y, z) in enumerate(self.nodes):
            j = lookup.get((float(-y) + 0.0, float(z)))
            if j is None:
                return None
            perm[i] = j
        return perm

    def is_mirror_symmetric(self) -> bool:
        perm = self.mirror_permutation()
        if perm is None:
            return False
        mirrored = {tuple(sorted(t)) for t in perm[self.triangles].tolist()}
        return mirrored == {tuple(sorted(t)) for t in self.triangles.tolist()}

    def half(self) -> "Mesh":
        """The ``y >= 0`` half of a mirror-symmetric mesh; the cut is tagged SymmetryPlane."""
        if not self.is_mirror_symmetric():
            raise MeshError("half() requires a mirror-symmetric mesh")
        centroid_y = self.nodes[self.triangles, 0].mean(axis=1)
        tris = self.triangles[centroid_y > 0]
        keep = np.unique(tris)
        remap = -np.ones(self.n_nodes, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        nodes = self.nodes[keep]
        tris = remap[tris]
        edges, tags = _tag_boundary(nodes, tris, self.epsilon, symmetry_plane=True)
        return Mesh(nodes, tris, edges, tags, self.epsilon)

    # text format ---------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{self.n_nodes} nodes {len(self.triangles)} triangles {len(self.boundary_edges)} edges"]
        lines += [f"{y:.17g} {z:.17g}" for y, z in self.nodes]
        lines += [f"{i} {j} {k}" for i, j, k in self.triangles]
        lines += [f"{i} {j} {t}" for (i, j), t in zip(self.boundary_edges, self.edge_tags)]
        lines.append(f"epsilon {self.epsilon:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Mesh":
        lines = text.splitlines()
        head = lines[0].split()
        nn, nt, nb = int(head[0]), int(head[2]), int(head[4])
        nodes = np.array([[float(v) for v in ln.split()] for ln in lines[1 : 1 + nn]])
        tris = np.array([[int(v) for v in ln.split()] for ln in lines[1 + nn : 1 + nn + nt]], dtype=np.int64)
        erows = [ln.split() for ln in lines[1 + nn + nt : 1 + nn + nt + nb]]
        edges = np.array([[int(r[0]), int(r[1])] for r in erows], dtype=np.int64).reshape(-1, 2)
        tags = np.array([r[2] for r in erows], dtype="<U1")
        eps = float("nan")
        for ln in lines[1 + nn + nt + nb :]:
            if ln.startswith("epsilon"):
                eps = float(ln.split()[1])
        return cls(nodes, tris.reshape(-1, 3), edges, tags, eps)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Mesh":
        return cls.from_text(Path(path).read_text())

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _edge_counts(triangles: np.ndarray):
    e = np.sort(np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]), axis=1)
    return np.unique(e, axis=0, return_counts=True)


def _tag_boundary(nodes, triangles, epsilon, symmetry_plane=False):
    edges, counts = _edge_counts(triangles)
    bnd = edges[counts == 1]
    p = nodes[bnd]
    tags = np.full(len(bnd), TAG_STEKLOV, dtype="<U1")
    if np.isfinite(epsilon):
        tags[(p[:, 0, 1] == epsilon) & (p[:, 1, 1] == epsilon)] = TAG_END
    if symmetry_plane:
        tags[(p[:, 0, 0] == 0.0) & (p[:, 1, 0] == 0.0)] = TAG_SYMMETRY
    return bnd, tags


def _canonical(nodes, triangles, epsilon, symmetry_plane=False) -> Mesh:
    """Sort nodes by (z, y) and triangles lexicographically; deterministic output."""
    order = np.lexsort((nodes[:, 0], nodes[:, 1]))
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    nodes = nodes[order]
    tris = inv[triangles]
    # orient counter-clockwise, then rotate so the smallest index leads
    p = nodes[tris]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    tris[det < 0] = tris[det < 0][:, [0, 2, 1]]
    shift = np.argmin(tris, axis=1)
    tris = np.take_along_axis(tris, (shift[:, None] + np.arange(3)) % 3, axis=1)
    tris = tris[np.lexsort(tris.T[::-1])]
    edges, tags = _tag_boundary(nodes, tris, epsilon, symmetry_plane)
    return Mesh(nodes, tris, edges, tags, float(epsilon))


# ---------------------------------------------------------------------------
# mesh generation
# ---------------------------------------------------------------------------


def _size_law(geom: CuspGeometry, h: float, grading: float):
    def size(z):
        z = np.asarray(z, dtype=float)
        return h * np.minimum(1.0, np.clip(z / geom.d, 0.0, None) ** grading)

    return size


def _discretize(seg: Segment, size, include_end: bool = False, fine: int = 4000) -> np.ndarray:
    """Points on ``seg`` spaced according to ``size(z)``; exact curve points."""
    t = np.linspace(seg.t0, seg.t1, fine)
    p = seg.sample(t)
    ds = np.linalg.norm(np.diff(p, axis=0), axis=1)
    zmid = 0.5 * (p[1:, 1] + p[:-1, 1])
    cum = np.concatenate([[0.0], np.cumsum(ds / size(zmid))])
    nseg = max(1, int(round(cum[-1])))
    tt = np.interp(np.linspace(0, cum[-1], nseg + 1), cum, t)
    tt[0], tt[-1] = seg.t0, seg.t1
    pts = seg.sample(tt)
    return pts if include_end else pts[:-1]


def _row_levels(geom: CuspGeometry, h: float, grading: float, n_across: int, z_b: float, eps: float):
    """z-levels of the structured neck rows from the interface ``z_b`` down to ``eps``."""
    size = _size_law(geom, h, grading)

    def spacing(z):
        return float(min(size(z), 2 * geom.a * z**2 / n_across))

    levels = [z_b]
    z = z_b
    while True:
        s = spacing(z - spacing(z))
        if z - eps <= 1.5 * s:
            levels.append(eps)
            break
        z = z - s
        levels.append(z)
    return np.array(levels), spacing


def _row_intervals(geom: CuspGeometry, z: float, spacing, n_across: int) -> int:
    half = geom.a * z**2
    return max(n_across, 2 * int(round(half / spacing(z))))


@functools.lru_cache(maxsize=16)
def _body_half_mesh(geom: CuspGeometry, h: float, grading: float, n_across: int):
    """Triangle mesh of the half body ``y >= 0, z >= d/4``; first nodes are the interface row."""
    z_b = geom.d / 4
    size = _size_law(geom, h, grading)
    _, spacing = _row_levels(geom, h, grading, n_across, z_b, z_b * 0.5)
    m = _row_intervals(geom, z_b, spacing, n_across) // 2
    yb = geom.a * z_b**2
    bottom = np.column_stack([yb * np.arange(m + 1) / m, np.full(m + 1, z_b)])

    dom = make_domain(geom, z_b * 0.999)
    right = [s for s in dom.segments if s.name.endswith("right")]
    cusp = right[0]
    cusp = Segment(cusp.name, cusp.tag, cusp.point, cusp.dpoint, z_b, cusp.t1)
    chain = [bottom[:-1]]
    for seg in [cusp, *right[1:]]:
        chain.append(_discretize(seg, size))
    top = np.array([[0.0, geom.z_top]])
    axis = Segment(
        "axis",
        TAG_SYMMETRY,
        lambda t: (np.zeros_like(t), t),
        lambda t: (np.zeros_like(t), np.ones_like(t)),
        z_b,
        geom.z_top,
    )
    ax = _discretize(axis, size, include_end=True)[::-1]  # top -> bottom
    ax[0] = top[0]
    chain.append(ax[:-1])
    verts = np.vstack(chain)
    nv = len(verts)
    segs = np.column_stack([np.arange(nv), (np.arange(nv) + 1) % nv])

    def target_area(pts, tris):
        zc = pts[tris, 1].mean(axis=1)
        return 0.5 * size(zc) ** 2

    amax = 0.5 * h**2
    tri = triangle.triangulate({"vertices": verts, "segments": segs}, f"pq30Ya{amax:.12g}Q")
    for _ in range(8):
        target = target_area(tri["vertices"], tri["triangles"])
        p = tri["vertices"][tri["triangles"]]
        area = 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )
        if np.all(area <= 1.2 * target):
            break
        tri["triangle_max_area"] = target
        tri = triangle.triangulate(tri, "rpq30YaQ")
    pts = np.array(tri["vertices"], dtype=float)
    pts[:nv] = verts  # Triangle keeps input vertices first; restore exact coordinates
    return pts, np.array(tri["triangles"], dtype=np.int64), m


def make_mesh(domain: Domain, h: float, grading: float = 1.0, n_across: int = 4) -> Mesh:
    """Graded, mirror-symmetric triangulation of ``domain``.

    Local element size is ``h * min(1, (z/d)**grading)``, further capped in the
    neck so that at least ``n_across`` elements span the width at every height.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if grading < 0:
        raise ValueError("grading must be >= 0")
    if n_across < 4 or n_across % 2:
        raise ValueError("n_across must be an even integer >= 4")
    geom, eps = domain.geom, domain.epsilon
    z_b = geom.d / 4
    body_pts, body_tris, m_b = _body_half_mesh(geom, float(h), float(grading), int(n_across))

    levels, spacing = _row_levels(geom, h, grading, n_across, z_b, eps)
    nodes = [body_pts]
    tris = [body_tris]
    offset = len(body_pts)
    upper = np.arange(m_b + 1)  # interface row indices in body_pts
    upper_pts = body_pts[: m_b + 1]
    for z in levels[1:]:
        m = _row_intervals(geom, z, spacing, n_across) // 2
        yz = geom.a * z**2
        row = np.column_stack([yz * np.arange(m + 1) / m, np.full(m + 1, z)])
        lower = offset + np.arange(m + 1)
        tris.append(_zipper(upper, upper_pts, lower, row))
        nodes.append(row)
        offset += m + 1
        upper, upper_pts = lower, row
    half_nodes = np.vstack(nodes)
    half_tris = np.vstack(tris)

    # mirror: axis nodes (y == 0) are shared
    on_axis = half_nodes[:, 0] == 0.0
    mirror_idx = np.where(on_axis, np.arange(len(half_nodes)), 0)
    off = np.flatnonzero(~on_axis)
    mirror_idx[off] = len(half_nodes) + np.arange(len(off))
    mirrored = half_nodes[off] * np.array([-1.0, 1.0])
    full_nodes = np.vstack([half_nodes, mirrored])
    full_tris = np.vstack([half_tris, mirror_idx[half_tris][:, ::-1]])
    mesh = _canonical(full_nodes, full_tris, eps)
    try:
        mesh.validate()
    except MeshError as exc:
        raise MeshError(f"{exc} (h={h}, eps={eps})") from None
    return mesh


def _zipper(upper_idx, upper_pts, lower_idx, lower_pts) -> np.ndarray:
    """Triangulate the strip between two rows that both start on the axis."""
    i = k = 0
    mu, ml = len(upper_idx) - 1, len(lower_idx) - 1
    out = []
    while i < mu or k < ml:
        if i == mu:
            advance_lower = True
        elif k == ml:
            advance_lower = False
        else:
            d_low = np.hypot(*(upper_pts[i] - lower_pts[k + 1]))
            d_up = np.hypot(*(upper_pts[i + 1] - lower_pts[k]))
            advance_lower = d_low <= d_up
        if advance_lower:
            out.append((upper_idx[i], lower_idx[k + 1], lower_idx[k]))
            k += 1
        else:
            out.append((upper_idx[i], upper_idx[i + 1], lower_idx[k]))
            i += 1
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# benchmark meshes
# ---------------------------------------------------------------------------


def disk_mesh(radius: float = 1.0, h: float = 0.05) -> Mesh:
    """Quality mesh of a disk; every boundary edge is Steklov."""
    nb = max(8, int(math.ceil(2 * math.pi * radius / h)))
    t = 2 * math.pi * np.arange(nb) / nb
    verts = radius * np.column_stack([np.cos(t), np.sin(t)])
    segs = np.column_stack([np.arange(nb), (np.arange(nb) + 1) % nb])
    tri = triangle.triangulate({"vertices": verts, "segments": segs}, f"pq30Ya{0.5 * h * h:.12g}Q")
    return _canonical(np.asarray(tri["vertices"], float), np.asarray(tri["triangles"], np.int64), float("nan"))


def rectangle_mesh(y0: float, y1: float, z0: float, z1: float, ny: int, nz: int) -> Mesh:
    """Structured criss-cross-free triangulation of a rectangle (alternating diagonals)."""
    ys = np.linspace(y0, y1, ny + 1)
    zs = np.linspace(z0, z1, nz + 1)
    Y, Z = np.meshgrid(ys, zs)
    nodes = np.column_stack([Y.ravel(), Z.ravel()])
    idx = np.arange((ny + 1) * (nz + 1)).reshape(nz + 1, ny + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    flip = ((np.arange(nz)[:, None] + np.arange(ny)[None, :]) % 2).ravel().astype(bool)
    t1 = np.where(flip[:, None], np.column_stack([a, b, d]), np.column_stack([a, b, c]))
    t2 = np.where(flip[:, None], np.column_stack([b, c, d]), np.column_stack([a, c, d]))
    return _canonical(nodes, np.vstack([t1, t2]), float(z0))
