"""Mesh generation: slit topology, regions, interface insertion."""

import math

import numpy as np
import pytest

from anisofrac.mesh import (
    Band,
    Everywhere,
    HalfPlane,
    Mesh,
    MeshError,
    assign_regions,
    boundary_dofs,
    generate_sent,
    generate_three_point_bending,
    insert_interface,
)


def test_sent_node_count_geometry_a():
    h = 0.25
    m = generate_sent(4.0, 4.0, 2.0, h)
    nx, ny = 16, 16
    n_slit = 8  # nodes at x in {0, ..., 1.75} on the mid row, tip excluded
    assert m.n_nodes == (nx + 1) * (ny + 1) + n_slit
    assert m.n_elements == nx * ny


def test_sent_geometry_b_scaling():
    a = generate_sent(4.0, 4.0, 2.0, 0.25)
    b = generate_sent(0.5, 0.5, 0.25, 0.03125)
    assert a.n_nodes == b.n_nodes and a.n_elements == b.n_elements
    assert np.allclose(a.nodes, 8.0 * b.nodes)


def test_sent_without_notch():
    m = generate_sent(1.0, 1.0, 0.0, 0.125)
    assert m.n_nodes == 9 * 9


def test_sent_rejects_bad_geometry():
    with pytest.raises(MeshError):
        generate_sent(4.0, 4.0, 4.0, 0.25)
    with pytest.raises(MeshError):
        generate_sent(4.0, 4.0, 2.0, 2.0)


def test_jacobians_positive_and_area_exact():
    for m in (generate_sent(4.0, 4.0, 2.0, 0.2),
              generate_sent(2.0, 1.0, 0.5, 0.1, refine_half_band=0.2),
              generate_sent(1.0, 1.0, 0.5, 0.05, path_angle=math.radians(20)),
              generate_three_point_bending(8.0, 2.0, 0.25)):
        assert m.jacobians().min() > 0.0
        lx = m.nodes[:, 0].max() - m.nodes[:, 0].min()
        ly = m.nodes[:, 1].max() - m.nodes[:, 1].min()
        assert m.element_areas().sum() == pytest.approx(lx * ly, rel=1e-10)


def test_slit_nodes_coincide_but_split_element_stars():
    m = generate_sent(2.0, 2.0, 1.0, 0.25)
    coords = [tuple(np.round(p, 12)) for p in m.nodes]
    dup_pairs = []
    seen = {}
    for i, c in enumerate(coords):
        if c in seen:
            dup_pairs.append((seen[c], i))
        seen[c] = i
    assert len(dup_pairs) == 4  # x in {0, 0.25, 0.5, 0.75} on the slit
    for a, b in dup_pairs:
        assert np.allclose(m.nodes[a], m.nodes[b])
        star_a = {e for e, q in enumerate(m.quads) if a in q}
        star_b = {e for e, q in enumerate(m.quads) if b in q}
        assert star_a and star_b and not (star_a & star_b)
        # duplicates separate above from below the slit line
        ya = m.nodes[m.quads[list(star_a)]].mean(axis=(0, 1))[1]
        yb = m.nodes[m.quads[list(star_b)]].mean(axis=(0, 1))[1]
        assert (ya - 1.0) * (yb - 1.0) < 0


def test_graded_axis_keeps_band_resolution():
    m = generate_sent(4.0, 4.0, 2.0, 0.0125, refine_half_band=0.3, h_coarse=0.1)
    ys = np.unique(np.round(m.nodes[:, 1], 12))
    dy = np.diff(ys)
    band = (ys[:-1] > 1.7) & (ys[1:] < 2.3)
    assert dy[band].max() <= 0.0125 * 1.0001
    assert m.nodes[:, 1].min() == 0.0 and m.nodes[:, 1].max() == 4.0
    # much smaller than the uniform mesh
    assert m.n_elements < 0.45 * 320 * 320


def test_bending_sets():
    m = generate_three_point_bending(8.0, 2.0, 0.25)
    s = m.boundary_sets
    xs = np.sort(m.nodes[s["supports"], 0])
    assert xs[0] == pytest.approx(0.0) and xs[1] == pytest.approx(8.0)
    assert abs(xs.mean() - 4.0) < 1e-12   # mirrored about midspan
    assert len(s["load_point"]) >= 1
    assert np.all(np.abs(m.nodes[s["load_point"], 0] - 4.0) < 0.125 + 1e-12)
    assert np.allclose(m.nodes[s["load_point"], 1], 2.0)


def test_assign_regions_default_and_band():
    m = generate_sent(1.0, 1.0, 0.0, 0.05)
    m0 = assign_regions(m, [(Everywhere(), 0)])
    assert np.all(m0.region_id == 0)

    band = Band(point=(0.5, 0.5), angle=math.radians(75.0), width=0.2)
    m1 = assign_regions(m, [(band, 2), (HalfPlane((0.5, 0.5), (-1, 0)), 0),
                            (Everywhere(), 1)])
    c = m1.nodes[m1.quads].mean(axis=1)
    n_hat = np.array([-math.sin(math.radians(75)), math.cos(math.radians(75))])
    inside = np.abs((c - [0.5, 0.5]) @ n_hat) <= 0.1
    assert np.array_equal(m1.region_id == 2, inside)
    # two half planes partition the rest
    assert (np.sum(m1.region_id == 0) + np.sum(m1.region_id == 1)
            + np.sum(inside)) == m1.n_elements


def test_assign_regions_requires_coverage():
    m = generate_sent(1.0, 1.0, 0.0, 0.25)
    with pytest.raises(MeshError):
        assign_regions(m, [(HalfPlane((0.5, 0.5), (1, 0)), 0)])


def test_region_assignment_deterministic():
    m = generate_sent(1.0, 1.0, 0.0, 0.1)
    shapes = [(Band((0.5, 0.5), 0.3, 0.25), 1), (Everywhere(), 0)]
    a = assign_regions(m, shapes).region_id
    b = assign_regions(m, shapes).region_id
    assert np.array_equal(a, b)


def test_insert_interface_midline():
    m = generate_sent(2.0, 2.0, 1.0, 0.25)
    n_before = m.n_nodes
    mi = insert_interface(m, (1.0, 1.0), (2.0, 1.0))
    assert len(mi.interfaces) == 4          # edges crossed between x=1 and x=2
    # interior endpoint (the notch tip) is shared, boundary endpoint duplicated
    assert mi.n_nodes == n_before + 4       # 3 interior chain nodes + right end
    for e in mi.interfaces:
        assert np.allclose(mi.nodes[list(e.lower)], mi.nodes[list(e.upper)])
        assert e.tangent @ e.normal == pytest.approx(0.0, abs=1e-15)
        assert np.linalg.norm(e.tangent) == pytest.approx(1.0)
        assert e.length == pytest.approx(0.25)
    assert mi.jacobians().min() > 0.0


def test_insert_interface_inclined_on_rotated_grid():
    # rotate a structured grid by 20 degrees; the rotated midline must pair up
    base = generate_sent(2.0, 1.0, 0.0, 0.125)
    ang = math.radians(20.0)
    r = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    rot = Mesh(nodes=base.nodes @ r.T, quads=base.quads.copy(),
               region_id=base.region_id.copy(),
               boundary_sets={k: v.copy() for k, v in base.boundary_sets.items()})
    p0 = r @ np.array([0.0, 0.5])
    p1 = r @ np.array([2.0, 0.5])
    mi = insert_interface(rot, p0, p1)
    assert len(mi.interfaces) == 16
    for e in mi.interfaces:
        assert np.allclose(mi.nodes[list(e.lower)], mi.nodes[list(e.upper)])
        assert e.tangent @ np.array([math.cos(ang), math.sin(ang)]) == pytest.approx(1.0)


def test_insert_interface_on_boundary_rejected():
    m = generate_sent(1.0, 1.0, 0.0, 0.25)
    with pytest.raises(MeshError):
        insert_interface(m, (0.0, 0.0), (1.0, 0.0))


def test_insert_interface_requires_edge_alignment():
    m = generate_sent(1.0, 1.0, 0.0, 0.25)
    with pytest.raises(MeshError):
        insert_interface(m, (0.0, 0.1), (1.0, 0.9))


def test_boundary_dofs():
    m = generate_sent(1.0, 1.0, 0.0, 0.25)
    top = m.boundary_sets["top"]
    assert np.array_equal(boundary_dofs(m, "top", "y"), np.sort(2 * top + 1))
    both = boundary_dofs(m, "bottom", "both")
    assert len(both) == 2 * len(m.boundary_sets["bottom"])
    with pytest.raises(KeyError):
        boundary_dofs(m, "nope", "x")
    with pytest.raises(ValueError):
        boundary_dofs(m, "top", "z")
