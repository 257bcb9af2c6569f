"""Local anatomical frames on a ventricular surface mesh.

Every cell gets an orthonormal, right-handed triad ``(radial,
circumferential, longitudinal)``: radial is the outward face normal and
``det[r c l] = +1``. Three constructions of the longitudinal direction:

``long_axis``
    circumferential = normalize(r x a) for the apex-to-base axis ``a``,
    longitudinal = r x c.
``heat``
    longitudinal = normalized gradient of a harmonic-like field ``u`` (apex 1,
    valve rims 0) obtained by repeated uniform neighbour averaging.
``geodesic``
    longitudinal = normalized gradient of the exact geodesic distance to the
    apex.

For the gradient-based methods ``c = l x r``. Cells where the construction
degenerates (vanishing cross product or gradient) inherit the longitudinal
direction of the nearest valid cell, found breadth-first over face adjacency
with ties going to the smaller face index, projected onto their own tangent
plane.
"""

from dataclasses import dataclass

import numpy as np

from .geodesic import geodesic_distance

DEGENERATE_TOL = 1e-12
METHODS = ("long_axis", "heat", "geodesic")


class DegenerateFieldError(ValueError):
    """No cell of the mesh admits a direction."""


class ConvergenceError(RuntimeError):
    pass


@dataclass
class DirectionField:
    radial: np.ndarray
    circumferential: np.ndarray
    longitudinal: np.ndarray
    method: str
    degenerate: np.ndarray

    def triads(self):
        """``F x 3 x 3`` array whose columns are ``r, c, l``."""
        return np.stack([self.radial, self.circumferential, self.longitudinal], axis=2)


def _normalize(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n, n[..., 0]


def long_axis(mesh):
    """Unit vector from the apex to the midpoint of the two valve centroids."""
    if mesh.apex is None or not mesh.tricuspid_loop or not mesh.pulmonary_loop:
        raise ValueError("apex and both valve loops must be annotated")
    V = mesh.vertices
    tv = V[mesh.tricuspid_loop].mean(axis=0)
    pv = V[mesh.pulmonary_loop].mean(axis=0)
    base = 0.5 * (tv + pv)
    axis = base - V[mesh.apex]
    return axis / np.linalg.norm(axis)


def _fill_degenerate(mesh, radial, longitudinal, degenerate):
    if degenerate.all():
        raise DegenerateFieldError(f"all cells degenerate: {np.flatnonzero(degenerate).tolist()}")
    if not degenerate.any():
        return longitudinal
    nbrs = mesh.face_neighbors()
    out = longitudinal.copy()
    for f in np.flatnonzero(degenerate):
        seen = {int(f)}
        frontier = [int(f)]
        found = None
        while frontier and found is None:
            nxt = []
            for g in frontier:
                for h in nbrs[g]:
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
            valid = sorted(h for h in nxt if not degenerate[h])
            if valid:
                found = valid[0]
            frontier = sorted(nxt)
        if found is None:
            raise DegenerateFieldError(f"cell {f} has no valid cell in its component")
        l = longitudinal[found]
        r = radial[f]
        proj = l - r * np.dot(l, r)
        n = np.linalg.norm(proj)
        if n < DEGENERATE_TOL:
            raise DegenerateFieldError(f"cell {f}: inherited direction is normal to the cell")
        out[f] = proj / n
    return out


def _from_longitudinal(mesh, radial, longitudinal, degenerate, method):
    longitudinal = _fill_degenerate(mesh, radial, longitudinal, degenerate)
    circumferential = np.cross(longitudinal, radial)
    circumferential, _ = _normalize(circumferential)
    # re-orthogonalize l against r exactly
    longitudinal = np.cross(radial, circumferential)
    return DirectionField(radial, circumferential, longitudinal, method, degenerate)


def long_axis_directions(mesh):
    radial = mesh.face_normals()
    axis = long_axis(mesh)
    c = np.cross(radial, axis[None, :])
    c_norm = np.linalg.norm(c, axis=1)
    degenerate = c_norm < DEGENERATE_TOL
    safe = np.where(degenerate, 1.0, c_norm)
    c = c / safe[:, None]
    l = np.cross(radial, c)
    l[degenerate] = 0.0
    if degenerate.any():
        l = _fill_degenerate(mesh, radial, l, degenerate)
        c = np.cross(l, radial)
        c, _ = _normalize(c)
        l = np.cross(radial, c)
    return DirectionField(radial, c, l, "long_axis", degenerate)


def triangle_gradient(mesh, u):
    """Per-cell gradient of the piecewise-linear field ``u`` (``F x 3``)."""
    u = np.asarray(u, dtype=float)
    V = mesh.vertices
    F = mesh.faces
    cross = mesh.face_cross()
    dbl_area = np.linalg.norm(cross, axis=1)
    n = cross / dbl_area[:, None]
    grad = np.zeros((len(F), 3))
    for k in range(3):
        # edge opposite vertex k, counter-clockwise
        e = V[F[:, (k + 2) % 3]] - V[F[:, (k + 1) % 3]]
        grad += u[F[:, k]][:, None] * np.cross(n, e)
    return grad / dbl_area[:, None]


def jacobi_average(adjacency, hot, cold, tol=1e-8, max_iter=100000):
    """Repeated uniform neighbour averaging with ``hot`` vertices at 1, ``cold`` at 0.

    All free vertices are updated at once from the previous iterate, then the
    fixed values are restored. Stops when ``max |u_new - u_old| < tol``.
    Returns ``(u, n_iter, residual)``.
    """
    A = adjacency
    deg = np.asarray(A.sum(axis=1)).ravel()
    if np.any(deg == 0):
        raise ValueError(f"isolated vertices: {np.flatnonzero(deg == 0).tolist()}")
    hot = np.atleast_1d(np.asarray(hot, dtype=np.int64))
    cold = np.atleast_1d(np.asarray(cold, dtype=np.int64))
    if set(hot.tolist()) & set(cold.tolist()):
        raise ValueError("a vertex cannot be fixed at both 1 and 0")
    u = np.zeros(A.shape[0])
    u[hot] = 1.0
    residual = np.inf
    for it in range(1, int(max_iter) + 1):
        new = (A @ u) / deg
        new[hot] = 1.0
        new[cold] = 0.0
        residual = float(np.max(np.abs(new - u)))
        u = new
        if residual < tol:
            return u, it, residual
    raise ConvergenceError(f"averaging did not converge in {max_iter} iterations (residual {residual:.3e})")


def heat_field(mesh, tol=1e-8, max_iter=100000):
    """Apex fixed at 1, valve loops at 0, uniform averaging elsewhere.

    Returns ``(u, n_iter, residual)`` where ``residual`` is the final
    ``max |u_new - u_old|``.
    """
    if mesh.apex is None or not (mesh.tricuspid_loop or mesh.pulmonary_loop):
        raise ValueError("apex and valve loops must be annotated")
    cold = sorted(set(mesh.tricuspid_loop) | set(mesh.pulmonary_loop))
    if mesh.apex in cold:
        raise ValueError("apex cannot lie on a valve loop")
    return jacobi_average(mesh.adjacency(), [mesh.apex], cold, tol, max_iter)


def heat_directions(mesh, u=None):
    if u is None:
        u, _, _ = heat_field(mesh)
    radial = mesh.face_normals()
    g = triangle_gradient(mesh, u)
    norm = np.linalg.norm(g, axis=1)
    degenerate = norm < DEGENERATE_TOL
    l = g / np.where(degenerate, 1.0, norm)[:, None]
    l[degenerate] = 0.0
    return _from_longitudinal(mesh, radial, l, degenerate, "heat")


def geodesic_directions(mesh, distance=None, method="exact"):
    if mesh.apex is None:
        raise ValueError("apex must be annotated")
    if distance is None:
        distance = geodesic_distance(mesh, mesh.apex, method=method)
    radial = mesh.face_normals()
    g = triangle_gradient(mesh, distance)
    norm = np.linalg.norm(g, axis=1)
    degenerate = norm < DEGENERATE_TOL
    l = g / np.where(degenerate, 1.0, norm)[:, None]
    l[degenerate] = 0.0
    return _from_longitudinal(mesh, radial, l, degenerate, "geodesic")


def direction_field(mesh, method, **kwargs):
    if method == "long_axis":
        return long_axis_directions(mesh)
    if method == "heat":
        return heat_directions(mesh, **kwargs)
    if method == "geodesic":
        return geodesic_directions(mesh, **kwargs)
    raise ValueError(f"unknown direction method {method!r}; expected one of {METHODS}")


def write_direction_csv(path, field):
    header = ["face_index", "r_x", "r_y", "r_z", "c_x", "c_y", "c_z", "l_x", "l_y", "l_z"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for f in range(len(field.radial)):
            vals = np.concatenate([field.radial[f], field.circumferential[f], field.longitudinal[f]])
            fh.write(str(f) + "," + ",".join(repr(float(v)) for v in vals) + "\n")
