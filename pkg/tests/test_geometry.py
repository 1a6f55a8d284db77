import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cusplab.geometry import (
    TAG_END,
    TAG_STEKLOV,
    TAG_SYMMETRY,
    BodySpec,
    CuspGeometry,
    Mesh,
    MeshError,
    disk_mesh,
    make_domain,
    make_mesh,
    rectangle_mesh,
)


@pytest.fixture(scope="module")
def canon():
    return CuspGeometry()


@pytest.fixture(scope="module")
def mesh01(canon):
    return make_mesh(make_domain(canon, 0.1), 0.05)


def test_end_segment_length(canon):
    dom = make_domain(canon, 0.1)
    end = [s for s in dom.segments if s.tag == TAG_END]
    assert len(end) == 1
    p = end[0].sample(np.array([end[0].t0, end[0].t1]))
    assert np.linalg.norm(p[1] - p[0]) == pytest.approx(0.02, rel=1e-14)
    assert np.all(p[:, 1] == 0.1)


@pytest.mark.parametrize("eps", [1.0, 0.25, 0.0, -0.1])
def test_make_domain_rejects_large_or_nonpositive_eps(canon, eps):
    with pytest.raises(ValueError):
        make_domain(canon, eps)


def test_cusp_arc_endpoint():
    g = CuspGeometry(a=0.5, d=2.0)
    dom = make_domain(g, 0.2)
    right = next(s for s in dom.segments if s.name == "cusp_right")
    ends = right.sample(np.array([right.t0, right.t1]))
    start = ends[np.argmin(ends[:, 1])]
    assert start == pytest.approx([0.02, 0.2], abs=1e-15)
    assert dom.half_width(0.2) == pytest.approx(0.02)


def test_boundary_closed_and_counter_clockwise(canon):
    dom = make_domain(canon, 0.05)
    segs = dom.segments
    for s, nxt in zip(segs, segs[1:] + segs[:1]):
        tail = s.sample(np.array([s.t1]))[0]
        head = nxt.sample(np.array([nxt.t0]))[0]
        assert np.allclose(tail, head, atol=1e-12)
    poly = dom.polyline(400)
    y, z = poly[:, 0], poly[:, 1]
    shoelace = 0.5 * np.sum(y * np.roll(z, -1) - np.roll(y, -1) * z)
    # orientation sign is positive in (y, z) coordinates; value approximates the exact area
    assert shoelace == pytest.approx(dom.area(), rel=1e-3)


def test_area_quadrature_matches_closed_form_in_cusp(canon):
    # cusp part alone: 2 a (d^3 - eps^3) / 3
    dom = make_domain(canon, 0.1)
    z = np.linspace(0.1, 1.0, 20001)
    trap = np.trapezoid(2 * dom.half_width(z), z)
    assert trap == pytest.approx(2 * (1 - 0.1**3) / 3, rel=1e-8)


def test_h_must_be_positive(canon):
    dom = make_domain(canon, 0.1)
    for h in (0.0, -0.1):
        with pytest.raises(ValueError):
            make_mesh(dom, h)


def test_mesh_invariants(mesh01):
    mesh01.validate()
    assert mesh01.min_angle() >= 15.0
    assert np.all(mesh01.triangle_areas() > 0)
    assert set(np.unique(mesh01.edge_tags)) == {TAG_STEKLOV, TAG_END}


def test_end_nodes_exactly_on_z_eps(mesh01):
    z = mesh01.nodes[mesh01.tag_nodes(TAG_END), 1]
    assert np.all(z == 0.1)


def test_at_least_three_elements_across_end(mesh01):
    assert len(mesh01.tag_edges(TAG_END)) >= 3


def test_mirror_symmetric_node_set(mesh01):
    assert mesh01.is_mirror_symmetric()
    key = {(round(y, 14), round(z, 14)) for y, z in mesh01.nodes}
    assert {(round(-y, 14), round(z, 14)) for y, z in mesh01.nodes} == key


def test_refinement_doubles_steklov_edges(canon):
    dom = make_domain(canon, 0.1)
    for h in (0.1, 0.05):
        n1 = len(make_mesh(dom, h).tag_edges(TAG_STEKLOV))
        n2 = len(make_mesh(dom, h / 2).tag_edges(TAG_STEKLOV))
        assert 1.6 <= n2 / n1 <= 2.4


def test_area_converges_second_order(canon):
    dom = make_domain(canon, 0.1)
    exact = dom.area()
    errs = [abs(make_mesh(dom, h).area() - exact) for h in (0.1, 0.05, 0.025)]
    for e1, e2 in zip(errs, errs[1:]):
        assert 2.5 <= e1 / e2 <= 6.0


def test_neck_resolved_at_small_eps(canon):
    mesh = make_mesh(make_domain(canon, 1e-3), 0.05)
    assert len(mesh.tag_edges(TAG_END)) >= 3
    assert mesh.min_angle() >= 15.0


def test_text_round_trip_is_byte_stable(mesh01, tmp_path):
    text = mesh01.to_text()
    assert text.splitlines()[0].split()[1::2] == ["nodes", "triangles", "edges"]
    mesh01.save(tmp_path / "m.txt")
    back = Mesh.load(tmp_path / "m.txt")
    assert back.to_text() == text
    assert np.array_equal(back.nodes, mesh01.nodes)
    assert back.epsilon == mesh01.epsilon


def test_meshing_is_deterministic(canon):
    dom = make_domain(canon, 0.02)
    assert make_mesh(dom, 0.05).digest() == make_mesh(dom, 0.05).digest()


def test_half_mesh_has_symmetry_plane(mesh01):
    half = mesh01.half()
    assert np.all(half.nodes[:, 0] >= 0)
    sym = half.tag_nodes(TAG_SYMMETRY)
    assert len(sym) > 0 and np.all(half.nodes[sym, 0] == 0)
    assert half.area() == pytest.approx(mesh01.area() / 2, rel=1e-12)


def test_half_requires_symmetric_mesh():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    m = Mesh(nodes, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]), np.array(["S", "S", "S"]))
    with pytest.raises(MeshError):
        m.half()


def test_measures_general_dimension():
    g2 = CuspGeometry(a=1.0)
    assert (g2.omega_measure, g2.omega_boundary_measure) == (2.0, 2.0)
    g3 = CuspGeometry(a=1.0, n=3)
    assert g3.omega_measure == pytest.approx(math.pi)
    assert g3.omega_boundary_measure == pytest.approx(2 * math.pi)


def test_geometry_dict_round_trip_and_hash():
    g = CuspGeometry(a=0.7, d=1.5, body=BodySpec(join_smoothness=3))
    back = CuspGeometry.from_dict(g.to_dict())
    assert back == g and back.geom_hash() == g.geom_hash()
    assert CuspGeometry(a=0.71, d=1.5).geom_hash() != g.geom_hash()


def test_invalid_geometry():
    with pytest.raises(ValueError):
        CuspGeometry(a=0)
    with pytest.raises(ValueError):
        CuspGeometry(n=1)
    with pytest.raises(ValueError):
        BodySpec(join_smoothness=1)


def test_body_join_is_c1(canon):
    z = canon.d
    dz = 1e-7
    dom = make_domain(canon, 0.1)
    left = (dom.half_width(z) - dom.half_width(z - dz)) / dz
    right = (dom.half_width(z + dz) - dom.half_width(z)) / dz
    assert left == pytest.approx(2 * canon.a * z, rel=1e-5)
    assert right == pytest.approx(left, rel=1e-5)


def test_disk_and_rectangle_meshes():
    d = disk_mesh(1.0, 0.1)
    d.validate()
    assert d.area() == pytest.approx(math.pi, rel=0.02)
    r = rectangle_mesh(-1, 1, 0, 2, 4, 6)
    assert r.area() == pytest.approx(4.0)
    assert np.all(r.nodes[r.tag_nodes(TAG_END), 1] == 0.0)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.2, 3.0), d=st.floats(0.5, 3.0), frac=st.floats(0.01, 0.99))
def test_end_length_property(a, d, frac):
    eps = frac * d / 4
    dom = make_domain(CuspGeometry(a=a, d=d), eps)
    end = next(s for s in dom.segments if s.tag == TAG_END)
    p = end.sample(np.array([end.t0, end.t1]))
    assert abs(p[1, 0] - p[0, 0]) == pytest.approx(2 * a * eps**2, rel=1e-12)
