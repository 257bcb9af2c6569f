import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from latentuq.mesh import MeshError, TriMesh, direction_field
from latentuq.strain import (
    NOISE_STD,
    add_region_noise,
    cell_strain_tensors,
    compute_strain,
    deformation_gradient,
    directional_strain,
    green_lagrange,
    vertex_aggregate,
    zone_means,
    zone_uncertainty_table,
)
from meshes import capped_cylinder, grid

TRI = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_identity_gradient():
    assert np.allclose(deformation_gradient(TRI, TRI), np.eye(3), atol=1e-14)


def test_rotation_gradient_is_rotation(rng):
    R = Rotation.random(random_state=1).as_matrix()
    tri = rng.normal(size=(3, 3))
    J = deformation_gradient(tri, tri @ R.T + rng.normal(size=3))
    assert np.abs(J - R).max() < 1e-12
    assert np.abs(green_lagrange(J)).max() < 1e-12


def test_scale_gradient_block_structure():
    J = deformation_gradient(TRI, 1.1 * TRI)
    assert np.allclose(J, np.diag([1.1, 1.1, 1.0]), atol=1e-14)
    E = green_lagrange(J)
    for h in ([1, 0, 0], [0, 1, 0], [np.sqrt(0.5), np.sqrt(0.5), 0]):
        assert directional_strain(E, h) == pytest.approx(0.105, abs=1e-12)


def test_degenerate_face_named():
    bad = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
    with pytest.raises(MeshError, match=r"\[0\]"):
        deformation_gradient(bad, TRI)


def test_green_lagrange_basic():
    assert np.array_equal(green_lagrange(np.eye(3)), np.zeros((3, 3)))
    E = green_lagrange(np.random.default_rng(0).normal(size=(5, 3, 3)))
    assert np.array_equal(E, np.swapaxes(E, -1, -2))


def test_directional_strain_examples():
    E = np.diag([0.3, -0.2, 0.0])
    assert directional_strain(E, [1.0, 0, 0]) == 0.3
    h = np.array([0.6, 0.8, 0.0])
    assert directional_strain(E, h) == directional_strain(E, -h)
    assert directional_strain(np.zeros((3, 3)), h) == 0.0
    with pytest.raises(ValueError, match="unit length"):
        directional_strain(E, [1.0, 1.0, 0.0])


def test_vertex_aggregate_hand_example():
    # vertex 1 shared by a cell of area 1 (value 0) and a cell of area 3 (value 4)
    V = np.array([[0.0, 0, 0], [1, 0, 0], [0, 2, 0], [4, 0, 0], [1, 1.5, 0]])
    m = TriMesh(V, [[0, 1, 2], [1, 3, 4]])
    assert m.face_areas().tolist() == [1.0, 3.0 * 0.75]
    # rescale the second cell to area exactly 3
    m.vertices[4, 1] = 2.0
    assert m.face_areas().tolist() == [1.0, 3.0]
    assert vertex_aggregate([0.0, 4.0], m)[1] == pytest.approx(3.0, abs=1e-15)


def test_vertex_aggregate_linearity_and_conservation():
    m = grid(6, 5, jitter=0.3)
    vals = np.random.default_rng(2).normal(size=m.n_faces)
    assert np.allclose(vertex_aggregate(np.full(m.n_faces, 2.5), m), 2.5, atol=1e-14)
    assert np.allclose(vertex_aggregate(3 * vals, m), 3 * vertex_aggregate(vals, m), atol=1e-13)
    # barycentric vertex areas conserve the area-weighted mean
    lhs = np.dot(m.vertex_areas(), vertex_aggregate(vals, m))
    assert lhs == pytest.approx(np.dot(m.face_areas(), vals), abs=1e-10)


def test_vertex_aggregate_isolated():
    m = TriMesh(np.vstack([TRI, [[5.0, 5, 5]]]), [[0, 1, 2]])
    with pytest.raises(MeshError, match="isolated"):
        vertex_aggregate([1.0], m)


def test_region_noise():
    x = np.linspace(-20, 20, 1000)
    mask = np.zeros(1000, dtype=bool)
    mask[100:600] = True
    assert np.array_equal(add_region_noise(x, mask, 0.0, 3), x)
    y = add_region_noise(x, mask, 1.0, 3)
    assert np.array_equal(y[~mask], x[~mask])
    assert abs(np.std(y[mask] - x[mask], ddof=1) / NOISE_STD - 1) < 0.15
    assert np.array_equal(y, add_region_noise(x, np.flatnonzero(mask), 1.0, 3))
    with pytest.raises(ValueError, match="empty"):
        add_region_noise(x, np.zeros(1000, dtype=bool), 1.0, 3)
    with pytest.raises(ValueError, match="alpha"):
        add_region_noise(x, mask, 1.5, 3)


def test_zone_tables():
    zones = np.repeat(np.arange(1, 9), 3)
    assert np.array_equal(zone_uncertainty_table(np.full(24, 2.0), zones), np.full(8, 2.0))
    U = np.stack([np.arange(24.0), np.arange(24.0) + 2])
    assert np.allclose(zone_uncertainty_table(U, zones), zone_means(U[0], zones) + 1)
    with pytest.raises(ValueError, match="zone 8"):
        zone_means(np.ones(21), zones[:21])


def test_rigid_motion_and_frame_independence(small_population):
    s = small_population.subjects[0]
    rng = np.random.default_rng(4)
    R = Rotation.random(random_state=5).as_matrix()
    moved = s.ed.with_vertices(s.ed.vertices @ R.T + rng.normal(size=3))
    f = compute_strain(s.ed, moved)
    assert max(np.abs(f.longitudinal).max(), np.abs(f.circumferential).max()) < 1e-10
    # rotate both phases: strains follow the rotated frames
    ed2 = s.ed.with_vertices(s.ed.vertices @ R.T)
    es2 = s.es.with_vertices(s.es.vertices @ R.T)
    a, b = compute_strain(s.ed, s.es), compute_strain(ed2, es2)
    assert np.abs(a.longitudinal - b.longitudinal).max() < 1e-10
    assert np.abs(a.circumferential - b.circumferential).max() < 1e-10


def test_uniform_tangential_scale_on_plane():
    m = grid(8, 5, jitter=0.2)
    m.apex = 0
    es = m.with_vertices(m.vertices * [1.1, 1.1, 1.0])
    E = cell_strain_tensors(m, es)
    for h in ([1.0, 0, 0], [0, 1.0, 0]):
        assert np.abs(directional_strain(E, np.tile(h, (m.n_faces, 1))) - 0.105).max() < 1e-10


def test_topology_mismatch():
    m = grid(4, 4)
    with pytest.raises(MeshError, match="topology"):
        cell_strain_tensors(m, grid(5, 4))


def test_cylinder_phantom_methods_agree():
    ed = capped_cylinder(n=48, rows=16)
    V = ed.vertices.copy()
    V[:, :2] *= 0.85
    V[:, 2] *= 0.9
    es = ed.with_vertices(V)
    lateral = np.abs(ed.face_normals()[:, 2]) < 1e-9
    fields = {m: compute_strain(ed, es, m) for m in ("long_axis", "heat", "geodesic")}
    for f in fields.values():
        assert np.abs(100 * f.longitudinal[lateral] - 100 * (0.81 - 1) / 2).max() < 2.0
        assert np.abs(100 * f.circumferential[lateral] - 100 * (0.85**2 - 1) / 2).max() < 2.0
    ref = fields["long_axis"]
    for f in fields.values():
        assert np.abs(100 * (f.longitudinal - ref.longitudinal)[lateral]).max() < 2.0
