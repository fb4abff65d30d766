import numpy as np
import pytest

from hypisop import candidates as cand
from hypisop import functionals as fn
from hypisop import mesh as msh
from hypisop.geometry import CELL_C, CELL_R, EPS_MAX


def octant_sphere(radius=0.2, n=6):
    return cand.seed_aaa(radius, n=n)


def closed_sphere(radius=0.2, n=6):
    m = msh.reflect_to_full_cell(octant_sphere(radius, n))
    return m


def test_constraint_projection_closed_form():
    p = np.array([0.3, 0.2, 0.1])
    q = msh.CONSTRAINTS["p3"].project(p)
    assert q[2] == 0.0 and np.allclose(q[:2], p[:2])
    s = msh.CONSTRAINTS["s1"]
    q = s.project(p)
    assert s.violation(q) < 1e-14


def test_project_to_constraint_intersection():
    q = msh.project_to_constraints(np.array([0.3, 0.25, 0.02]), {"s1", "p3"})
    assert msh.CONSTRAINTS["s1"].violation(q) < 1e-10
    assert abs(q[2]) < 1e-10


def test_tangent_project_kills_normal_components():
    p = msh.project_to_constraints(np.array([0.3, 0.25, 0.0]), {"s1", "p3"})
    g = np.array([1.0, -2.0, 0.5])
    t = msh.tangent_project(g, p, {"s1", "p3"})
    assert abs(t @ msh.CONSTRAINTS["p3"].normal(p)) < 1e-12
    assert abs(t @ msh.CONSTRAINTS["s1"].normal(p)) < 1e-12


def test_validate_catches_broken_meshes():
    m = octant_sphere()
    m.validate()
    bad = m.copy()
    bad.positions[0] = [0.0, 0.0, 0.999999999]
    with pytest.raises(msh.MeshError):
        bad.validate()
    bad2 = m.copy()
    bad2.facets[0] = bad2.facets[0][::-1]  # orientation flip
    with pytest.raises(msh.MeshError):
        bad2.validate()


def test_refine_quadruples_and_preserves_bindings():
    m = octant_sphere()
    r = msh.refine(m)
    assert r.n_facets == 4 * m.n_facets
    r.validate()
    # constrained midpoints were projected back onto their constraints
    for vi, ids in enumerate(r.vertex_constraints):
        for ident in ids:
            assert msh.CONSTRAINTS[ident].violation(r.positions[vi]) < 1e-9


def test_refine_keeps_volume_of_flat_configuration():
    # refinement only inserts midpoints, so the surface is geometrically
    # unchanged; the flux volume moves only by the quadrature error of the
    # curved integrand over the very same flat facets
    m = octant_sphere(radius=0.15)
    flat = m.copy()
    flat.vertex_constraints = [frozenset()] * flat.n_vertices
    v0 = fn.total_volume(flat)
    v1 = fn.total_volume(msh.refine(flat))
    assert v1 == pytest.approx(v0, rel=1e-5)


def delaunay_violations(m, tol=1e-6):
    bad = 0
    for (a, b), uses in m.edge_map().items():
        if len(uses) != 2:
            continue
        (f1, _), (f2, _) = uses
        if m.clear[f1] != m.clear[f2]:
            continue
        c = int(np.setdiff1d(m.facets[f1], [a, b])[0])
        d = int(np.setdiff1d(m.facets[f2], [a, b])[0])
        if c == d:
            continue
        ang = msh._opposite_angle(
            m.positions[a], m.positions[b], m.positions[c]
        ) + msh._opposite_angle(m.positions[a], m.positions[b], m.positions[d])
        if ang > np.pi + tol:
            bad += 1
    return bad


def test_equiangulate_enforces_delaunay_criterion():
    m = msh.refine(octant_sphere(radius=0.22, n=4))
    # drag interior vertices tangentially to create skinny triangles
    rng = np.random.default_rng(3)
    for vi, ids in enumerate(m.vertex_constraints):
        if not ids:
            u = m.positions[vi]
            t = np.cross(u, [0.0, 0.0, 1.0])
            m.positions[vi] = u + 0.3 * rng.random() * t
    before = delaunay_violations(m)
    assert before > 0
    e = msh.equiangulate(m)
    e.validate()
    assert e.n_facets == m.n_facets
    assert delaunay_violations(e) < before


def test_vertex_average_keeps_constraints_and_orientation():
    m = msh.refine(octant_sphere())
    out = msh.vertex_average(m)
    out.validate()
    dots = np.einsum(
        "fd,fd->f", out.euclidean_normals(), m.euclidean_normals()
    )
    assert np.all(dots > 0.0)


def test_collapse_short_edges_merges_and_respects_flag():
    m = octant_sphere(n=8)
    lens = m.riemannian_edge_lengths()
    tol = float(np.quantile(lens, 0.1))
    c = msh.collapse_short_edges(m, tol)
    assert c.n_vertices < m.n_vertices
    assert c.riemannian_edge_lengths().min() >= tol * 0.5
    c.validate()
    # constrained_only never touches interior edges
    free = m.copy()
    free.vertex_constraints = [frozenset()] * free.n_vertices
    same = msh.collapse_short_edges(free, tol, constrained_only=True)
    assert same.n_vertices == free.n_vertices


def test_mirror_and_reflect_produce_closed_watertight_mesh():
    m = octant_sphere()
    full = msh.reflect_to_full_cell(m)
    assert full.boundary_edges() == []
    # Euler characteristic of a sphere
    ne = len(full.edge_array())
    assert full.n_vertices - ne + full.n_facets == 2
    full.validate()
    # enclosed volume is eight times the octant flux volume
    assert fn.total_volume(full) == pytest.approx(8.0 * fn.total_volume(m), rel=1e-12)


def test_degeneracy_report_healthy_and_pinched():
    m = octant_sphere()
    assert msh.degeneracy_report(m) == msh.HEALTHY
    bad = m.copy()
    # collapse one edge far below tolerance
    e = bad.edge_array()[0]
    bad.positions[e[1]] = bad.positions[e[0]] + 1e-9
    assert msh.degeneracy_report(bad) == msh.DEGENERATE


def test_degeneracy_report_neck_girth():
    # an interior vertex whose link polygon contracts below the girth
    # tolerance marks a pinched neck even with no tiny single edge
    m = msh.refine(octant_sphere(n=4))
    interior = [vi for vi, ids in enumerate(m.vertex_constraints) if not ids]
    vi = interior[0]
    star = [fi for fi, tri in enumerate(m.facets) if vi in tri]
    ring = sorted({int(v) for fi in star for v in m.facets[fi]} - {vi})
    for v in ring:
        m.positions[v] = m.positions[vi] + 1e-5 * (m.positions[v] - m.positions[vi])
    assert msh.degeneracy_report(m) == msh.DEGENERATE


def test_off_round_trip(tmp_path):
    m = octant_sphere()
    path = tmp_path / "mesh.off"
    msh.write_off(m, path)
    back = msh.read_off(path)
    assert back.n_vertices == m.n_vertices
    assert np.allclose(back.positions, m.positions)
    assert np.array_equal(back.facets, m.facets)
    assert np.array_equal(back.clear, m.clear)
    assert back.vertex_constraints == m.vertex_constraints
    back.validate()


def test_constraint_registry_covers_cell():
    assert set(msh.CONSTRAINTS) == {
        "p1", "p2", "p3", "s1", "s2", "s3", "s1m", "s2m", "s3m"
    }
    for ident, con in msh.CONSTRAINTS.items():
        if con.kind == "sphere":
            assert con.radius == CELL_R
            assert np.linalg.norm(con.center) == pytest.approx(CELL_C)
