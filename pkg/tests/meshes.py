"""Small analytic meshes for the geometry tests."""

import numpy as np

from latentuq.mesh.trimesh import TriMesh


def grid(nx=11, ny=6, width=2.0, height=1.0, jitter=0.0, seed=0):
    """Planar rectangle in z = 0 with alternating diagonals, counter-clockwise."""
    rng = np.random.default_rng(seed)
    xs, ys = np.meshgrid(np.linspace(0, width, nx), np.linspace(0, height, ny))
    P = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(nx * ny)])
    inner = (P[:, 0] > 0) & (P[:, 0] < width) & (P[:, 1] > 0) & (P[:, 1] < height)
    step = min(width / (nx - 1), height / (ny - 1))
    P[inner, :2] += rng.uniform(-jitter, jitter, (inner.sum(), 2)) * step
    F = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            a = j * nx + i
            b, c, d = a + 1, a + nx, a + nx + 1
            if (i + j) % 2:
                F += [[a, b, d], [a, d, c]]
            else:
                F += [[a, b, c], [b, d, c]]
    return TriMesh(P, F)


def cylinder(n=48, rows=16, radius=1.0, height=2.0):
    """Open cylinder around the z axis, outward normals, rows of ``n`` vertices."""
    P, F = [], []
    for j in range(rows + 1):
        for i in range(n):
            t = 2 * np.pi * i / n
            P.append([radius * np.cos(t), radius * np.sin(t), height * j / rows])
    for j in range(rows):
        for i in range(n):
            a, b = j * n + i, j * n + (i + 1) % n
            c, d = a + n, b + n
            F += [[a, b, d], [a, d, c]]
    return TriMesh(np.array(P), F)


def capped_cylinder(n=32, rows=12, radius=10.0, height=30.0):
    """Cylinder closed at the bottom by a shallow cone to an apex.

    The open top rim is annotated as both valve loops, so the long axis runs
    from the apex to the rim centre.
    """
    m = cylinder(n, rows, radius, height)
    apex = len(m.vertices)
    V = np.vstack([m.vertices, [[0.0, 0.0, -radius * 0.5]]])
    F = [list(f) for f in m.faces] + [[apex, (i + 1) % n, i] for i in range(n)]
    top = [rows * n + i for i in range(n)]
    return TriMesh(V, F, apex=apex, tricuspid_loop=top, pulmonary_loop=top)


def disk(rings=8, sectors=24, radius=1.0):
    """Planar disk with a centre vertex 0, counter-clockwise seen from +z."""
    P = [[0.0, 0.0, 0.0]]
    for r in range(1, rings + 1):
        for s in range(sectors):
            t = 2 * np.pi * s / sectors
            P.append([radius * r / rings * np.cos(t), radius * r / rings * np.sin(t), 0.0])
    F = []
    for s in range(sectors):
        F.append([0, 1 + s, 1 + (s + 1) % sectors])
    for r in range(1, rings):
        base, nxt = 1 + (r - 1) * sectors, 1 + r * sectors
        for s in range(sectors):
            a, b = base + s, base + (s + 1) % sectors
            c, d = nxt + s, nxt + (s + 1) % sectors
            F += [[a, c, d], [a, d, b]]
    return TriMesh(np.array(P), F)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
