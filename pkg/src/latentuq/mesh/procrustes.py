"""Rigid generalized Procrustes alignment of corresponding point sets."""

import numpy as np

from .trimesh import MeshError


def kabsch(points, target):
    """Rotation ``R`` minimising ``||points @ R.T - target||`` for centred inputs."""
    H = points.T @ target
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    if d == 0:
        d = 1.0
    D = np.diag([1.0] * (H.shape[0] - 1) + [d])
    return Vt.T @ D @ U.T


def generalized_procrustes(shapes, tol=1e-9, max_iter=100):
    """Align ``n`` corresponding ``V x 3`` point sets by rotation and translation.

    The first shape seeds the mean; every iteration rotates each centred shape
    onto the current mean and recomputes the mean, which is kept in the
    frame of the previous one. Stops when the mean moves less than ``tol``
    (max absolute coordinate change).

    Returns
    -------
    aligned : list of ndarray
    n_iter : int
    """
    shapes = [np.asarray(s, dtype=float) for s in shapes]
    if not shapes:
        return [], 0
    n_pts = {s.shape for s in shapes}
    if len(n_pts) != 1:
        raise MeshError(f"shapes must share vertex count, got {sorted(n_pts)}")
    centred = [s - s.mean(axis=0) for s in shapes]
    mean = centred[0].copy()
    aligned = centred
    for it in range(1, max_iter + 1):
        aligned = [c @ kabsch(c, mean).T for c in centred]
        new_mean = np.mean(aligned, axis=0)
        new_mean = new_mean @ kabsch(new_mean, mean).T
        shift = float(np.max(np.abs(new_mean - mean)))
        mean = new_mean
        if shift < tol:
            break
    aligned = [c @ kabsch(c, mean).T for c in centred]
    return aligned, it


def procrustes_align(meshes, tol=1e-9, max_iter=100):
    """Rigidly co-register meshes with point-to-point correspondence."""
    n_vertices = {m.n_vertices for m in meshes}
    if len(n_vertices) > 1:
        raise MeshError(f"meshes must share vertex count, got {sorted(n_vertices)}")
    aligned, _ = generalized_procrustes([m.vertices for m in meshes], tol, max_iter)
    return [m.with_vertices(v) for m, v in zip(meshes, aligned)]
