import numpy as np
import pytest

from latentuq.mesh import ExactGeodesic, geodesic_distance, subdivision_dijkstra
from meshes import cylinder, disk, grid


@pytest.mark.parametrize("source", [0, 17, 60])
def test_planar_equals_euclidean(source):
    m = grid(13, 7, jitter=0.3, seed=source)
    d = geodesic_distance(m, source)
    assert np.abs(d - np.linalg.norm(m.vertices - m.vertices[source], axis=1)).max() < 1e-9


def test_planar_symmetry():
    m = grid(9, 6, jitter=0.25, seed=1)
    solver = ExactGeodesic(m)
    a, b = 3, 40
    assert abs(solver.distances(a)[b] - solver.distances(b)[a]) < 1e-9


def test_concave_domain_bends_at_corner():
    # L-shaped domain: remove the upper-right block of a grid
    m = grid(9, 9, width=2.0, height=2.0)
    c = m.face_centroids()
    keep = ~((c[:, 0] > 1.0) & (c[:, 1] > 1.0))
    from latentuq.mesh import TriMesh

    L = TriMesh(m.vertices, m.faces[keep])
    src = 8  # (2, 0)
    tgt = 8 * 9 + 4  # (1, 2) ... walks around the reflex corner (1, 1)
    d = geodesic_distance(L, src)
    corner = np.array([1.0, 1.0, 0.0])
    expected = np.linalg.norm(L.vertices[src] - corner) + np.linalg.norm(corner - L.vertices[tgt])
    straight = np.linalg.norm(L.vertices[src] - L.vertices[tgt])
    assert d[tgt] == pytest.approx(max(expected, straight), abs=1e-9)


def test_cylinder_matches_unrolled():
    n, rows, r, h = 64, 20, 1.0, 2.0
    m = cylinder(n, rows, r, h)
    d = geodesic_distance(m, 0)
    idx = np.arange(m.n_vertices)
    i, j = idx % n, idx // n
    theta = 2 * np.pi * np.minimum(i, n - i) / n
    analytic = np.hypot(r * theta, h * j / rows)
    ok = analytic > 0
    assert np.max(np.abs(d[ok] - analytic[ok]) / analytic[ok]) < 0.01


def test_disk_distances_radial():
    m = disk(6, 20)
    d = geodesic_distance(m, 0)
    assert np.allclose(d, np.linalg.norm(m.vertices, axis=1), atol=1e-9)


def test_exact_below_subdivision_and_edge_inequality():
    m = cylinder(24, 8)
    d = geodesic_distance(m, 5)
    sub = subdivision_dijkstra(m, 5, n_subdivisions=3)
    assert np.all(d <= sub + 1e-12)
    e = m.edges()
    lengths = np.linalg.norm(m.vertices[e[:, 0]] - m.vertices[e[:, 1]], axis=1)
    assert np.all(d[e[:, 0]] <= d[e[:, 1]] + lengths + 1e-12)
    assert np.all(d[e[:, 1]] <= d[e[:, 0]] + lengths + 1e-12)
    assert d[5] == 0.0


def test_subdivision_converges_downwards():
    m = cylinder(16, 6)
    coarse = subdivision_dijkstra(m, 0, 0)
    fine = subdivision_dijkstra(m, 0, 2)
    assert np.all(fine <= coarse + 1e-12)


def test_ventricle_within_one_percent_of_subdivision(small_population):
    m = small_population.subjects[0].ed
    d = geodesic_distance(m, m.apex)
    sub = geodesic_distance(m, m.apex, method="subdivision")
    ok = d > 0
    assert np.all(d <= sub + 1e-9)
    assert np.max((sub[ok] - d[ok]) / d[ok]) < 0.01


def test_unknown_method():
    with pytest.raises(ValueError):
        geodesic_distance(grid(3, 3), 0, method="heat")


def test_bad_source():
    with pytest.raises(IndexError):
        geodesic_distance(grid(3, 3), 99)
