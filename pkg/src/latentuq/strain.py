"""Green-Lagrange strain between paired end-diastolic and end-systolic meshes.

Per cell, the deformation gradient maps the two end-diastolic edge vectors
and the unit normal onto their end-systolic counterparts. Directional strain
along a unit tangent ``h`` is ``h^T E h``. Strains are fractions internally;
:func:`compute_strain` reports vertex values in percent.
"""

from dataclasses import dataclass

import numpy as np

from .mesh.directions import direction_field
from .mesh.trimesh import MeshError

AREA_TOL = 1e-12
UNIT_TOL = 1e-8
NOISE_STD = 10.0  # strain-%, i.e. N(0, 100)
N_ZONES = 8


def _frames(tri):
    """``[e1 e2 n]`` as columns for a batch ``(..., 3, 3)`` of triangles (rows = vertices)."""
    e1 = tri[..., 1, :] - tri[..., 0, :]
    e2 = tri[..., 2, :] - tri[..., 0, :]
    n = np.cross(e1, e2)
    dbl = np.linalg.norm(n, axis=-1)
    return np.stack([e1, e2, n / np.where(dbl == 0, 1.0, dbl)[..., None]], axis=-1), 0.5 * dbl


def deformation_gradients(ed_tris, es_tris):
    """Batch version of :func:`deformation_gradient` for ``F x 3 x 3`` inputs."""
    ed_tris = np.asarray(ed_tris, dtype=float)
    es_tris = np.asarray(es_tris, dtype=float)
    A, area = _frames(ed_tris)
    bad = np.flatnonzero(area <= AREA_TOL)
    if bad.size:
        raise MeshError(f"degenerate end-diastolic faces (area <= {AREA_TOL}): {bad.tolist()}")
    B, area_es = _frames(es_tris)
    bad = np.flatnonzero(area_es <= AREA_TOL)
    if bad.size:
        raise MeshError(f"degenerate end-systolic faces (area <= {AREA_TOL}): {bad.tolist()}")
    # J A = B  =>  J = B A^{-1}, solved as A^T J^T = B^T
    return np.swapaxes(np.linalg.solve(np.swapaxes(A, -1, -2), np.swapaxes(B, -1, -2)), -1, -2)


def deformation_gradient(cell_ed, cell_es):
    """3x3 ``J`` with ``J [e1 e2 n] = [e1' e2' n']`` for one triangle.

    >>> import numpy as np
    >>> tri = np.array([[0., 0, 0], [1, 0, 0], [0, 1, 0]])
    >>> np.allclose(deformation_gradient(tri, tri), np.eye(3))
    True
    """
    return deformation_gradients(np.asarray(cell_ed, dtype=float)[None], np.asarray(cell_es, dtype=float)[None])[0]


def green_lagrange(J):
    """``E = (J^T J - I) / 2``; works on a single matrix or a stack."""
    J = np.asarray(J, dtype=float)
    E = 0.5 * (np.swapaxes(J, -1, -2) @ J - np.eye(3))
    return 0.5 * (E + np.swapaxes(E, -1, -2))


def directional_strain(E, h):
    """``h^T E h`` for unit ``h`` (batched over leading axes)."""
    h = np.asarray(h, dtype=float)
    norm = np.linalg.norm(h, axis=-1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise ValueError(f"direction must be unit length within {UNIT_TOL}, got norm {norm.ravel()[np.argmax(np.abs(norm - 1.0).ravel())]!r}")
    return np.einsum("...i,...ij,...j->...", h, np.asarray(E, dtype=float), h)


def vertex_aggregate(cell_values, mesh):
    """Area-weighted mean of incident-cell values at every vertex."""
    cell_values = np.asarray(cell_values, dtype=float)
    if cell_values.shape[0] != mesh.n_faces:
        raise ValueError(f"expected {mesh.n_faces} cell values, got {cell_values.shape[0]}")
    areas = mesh.face_areas()
    weight = np.zeros(mesh.n_vertices)
    np.add.at(weight, mesh.faces.ravel(), np.repeat(areas, 3))
    isolated = np.flatnonzero(weight == 0)
    if isolated.size:
        raise MeshError(f"isolated vertices have no incident cells: {isolated.tolist()}")
    tail = cell_values.shape[1:]
    total = np.zeros((mesh.n_vertices,) + tail)
    contrib = (areas.reshape((-1,) + (1,) * len(tail)) * cell_values)
    for k in range(3):
        np.add.at(total, mesh.faces[:, k], contrib)
    return total / weight.reshape((-1,) + (1,) * len(tail))


def add_region_noise(values, mask, alpha, seed):
    """Add ``alpha * N(0, 100)`` to the masked entries of ``values`` (in %).

    One draw is made per vertex (masked or not) from a generator seeded
    with ``seed``, so the noise at a vertex does not depend on the mask.
    """
    values = np.asarray(values, dtype=float)
    mask = np.asarray(mask)
    if mask.dtype != bool:
        idx = mask.astype(np.int64)
        mask = np.zeros(values.shape[0], dtype=bool)
        mask[idx] = True
    if not mask.any():
        raise ValueError("noise mask is empty")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    eps = np.random.default_rng(seed).normal(0.0, NOISE_STD, size=values.shape)
    out = values.copy()
    out[mask] = values[mask] + alpha * eps[mask]
    return out


def zone_means(U, zones, n_zones=N_ZONES):
    """Mean of ``U`` (``V`` or ``K x V``) over each zone label ``1..n_zones``."""
    U = np.asarray(U, dtype=float)
    zones = np.asarray(zones)
    if zones.shape[0] != U.shape[-1]:
        raise ValueError(f"{zones.shape[0]} zone labels for {U.shape[-1]} vertices")
    out = []
    for z in range(1, n_zones + 1):
        sel = zones == z
        if not sel.any():
            raise ValueError(f"zone {z} has no vertices")
        out.append(U[..., sel].mean(axis=-1))
    return np.stack(out, axis=-1)


def zone_uncertainty_table(U, zones, n_zones=N_ZONES):
    """Zone means of a per-vertex map; a ``K x V`` stack is averaged over subjects."""
    means = zone_means(U, zones, n_zones)
    return means.mean(axis=0) if means.ndim == 2 else means


@dataclass
class StrainField:
    """Strain of one subject: per-cell tensors and directional values.

    ``longitudinal`` and ``circumferential`` are per-cell fractions;
    ``vertex_longitudinal`` and ``vertex_circumferential`` are per-vertex
    percentages.
    """

    tensors: np.ndarray
    longitudinal: np.ndarray
    circumferential: np.ndarray
    vertex_longitudinal: np.ndarray
    vertex_circumferential: np.ndarray
    method: str


def cell_strain_tensors(ed, es):
    if ed.n_vertices != es.n_vertices or not np.array_equal(ed.faces, es.faces):
        raise MeshError("end-diastolic and end-systolic meshes must share topology")
    J = deformation_gradients(ed.vertices[ed.faces], es.vertices[es.faces])
    return green_lagrange(J)


def compute_strain(ed, es, method="long_axis", directions=None):
    """Longitudinal and circumferential strain of ``es`` relative to ``ed``.

    Directions are computed on the end-diastolic mesh unless given.
    """
    E = cell_strain_tensors(ed, es)
    if directions is None:
        directions = direction_field(ed, method)
    ell = directional_strain(E, directions.longitudinal)
    circ = directional_strain(E, directions.circumferential)
    return StrainField(
        tensors=E,
        longitudinal=ell,
        circumferential=circ,
        vertex_longitudinal=100.0 * vertex_aggregate(ell, ed),
        vertex_circumferential=100.0 * vertex_aggregate(circ, ed),
        method=directions.method,
    )
