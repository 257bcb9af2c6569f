"""Geodesic distances on triangle meshes.

``exact`` implements continuous-Dijkstra window propagation. A window is an
interval ``[t0, t1]`` of an edge lit by a (possibly unfolded) point source
``S`` carrying an offset ``sigma``; the distance at edge parameter ``t`` is
``sigma + |S - (t, 0)|`` in the edge frame (origin at the lower-index vertex,
x along the edge, the face being entered on ``y > 0``, the source on
``y <= 0``). Propagating through a face clips the wedge of rays from ``S``
against the two far edges. Boundary vertices and vertices whose angle sum
exceeds ``2 pi`` act as pseudo-sources, since shortest paths may bend there.

Windows are kept overlapping; a window is dropped only when a path through
one of its edge's end vertices is strictly shorter at every point of the
window, which cannot remove a shortest path.

``subdivision`` runs Dijkstra on a graph with Steiner points inserted on
every edge (``n`` rounds of edge bisection give ``2**n - 1`` interior
points) and straight in-face connections; every graph path lies on the
surface, so it bounds the exact distance from above.
"""

import heapq
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

PRUNE_RTOL = 1e-12
COVER_TOL = 1e-10


class _Topology:
    def __init__(self, mesh):
        V = mesh.vertices
        F = mesh.faces
        self.n_vertices = len(V)
        edge_index = {}
        edges = []
        edge_faces = []
        face_edges = np.zeros((len(F), 3), dtype=np.int64)
        face_opp = np.zeros((len(F), 3), dtype=np.int64)
        for f, tri in enumerate(F.tolist()):
            for k in range(3):
                a, b, c = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
                key = (a, b) if a < b else (b, a)
                e = edge_index.get(key)
                if e is None:
                    e = len(edges)
                    edge_index[key] = e
                    edges.append(key)
                    edge_faces.append([])
                edge_faces[e].append(f)
                face_edges[f, k] = e
                face_opp[f, k] = c
        self.edges = np.array(edges, dtype=np.int64)
        self.edge_len = np.linalg.norm(V[self.edges[:, 0]] - V[self.edges[:, 1]], axis=1)
        self.edge_faces = edge_faces
        self.face_edges = face_edges
        self.face_opp = face_opp

        # third vertex of each (face, edge) in that edge's frame, y > 0
        self.face_c2d = np.zeros((len(F), 3, 2))
        for f in range(len(F)):
            for k in range(3):
                e = face_edges[f, k]
                u, v = self.edges[e]
                c = face_opp[f, k]
                L = self.edge_len[e]
                uc = np.linalg.norm(V[c] - V[u])
                vc = np.linalg.norm(V[c] - V[v])
                cx = (L * L + uc * uc - vc * vc) / (2.0 * L)
                cy = math.sqrt(max(uc * uc - cx * cx, 0.0))
                self.face_c2d[f, k] = (cx, cy)

        self.vertex_faces = [[] for _ in range(len(V))]
        for f, tri in enumerate(F.tolist()):
            for v in tri:
                self.vertex_faces[v].append(f)

        angle = np.zeros(len(V))
        p = V[F]
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cosang = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            np.add.at(angle, F[:, k], np.arccos(np.clip(cosang, -1.0, 1.0)))
        boundary = np.zeros(len(V), dtype=bool)
        for e, fs in enumerate(edge_faces):
            if len(fs) == 1:
                boundary[self.edges[e]] = True
        # flat vertices never bend a shortest path; saddles and boundary do
        self.pseudo_source = boundary | (angle > 2.0 * math.pi + 1e-9)
        self.edge_index = edge_index

    def other_face(self, e, f):
        for g in self.edge_faces[e]:
            if g != f:
                return g
        return None

    def local_index(self, f, e):
        fe = self.face_edges[f]
        for k in range(3):
            if fe[k] == e:
                return k
        raise KeyError((f, e))


class ExactGeodesic:
    """Reusable exact geodesic solver for one mesh.

    Examples
    --------
    >>> solver = ExactGeodesic(mesh)            # doctest: +SKIP
    >>> d = solver.distances(mesh.apex)         # doctest: +SKIP
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.topo = _Topology(mesh)
        self.n_windows = 0

    def distances(self, source):
        topo = self.topo
        n = topo.n_vertices
        source = int(source)
        if not 0 <= source < n:
            raise IndexError(f"source vertex {source} out of range")
        V = self.mesh.vertices
        edges = topo.edges.tolist()
        edge_len = topo.edge_len.tolist()
        edge_faces = topo.edge_faces
        face_edges = topo.face_edges.tolist()
        face_opp = topo.face_opp.tolist()
        face_c2d = topo.face_c2d.tolist()
        pseudo = topo.pseudo_source.tolist()
        hypot = math.hypot

        dist = [math.inf] * n
        dist[source] = 0.0
        heap = [(0.0, 0, 0, source)]
        counter = 1
        n_windows = 0

        def relax(v, value):
            nonlocal counter
            if value < dist[v]:
                dist[v] = value
                if pseudo[v] or v == source:
                    counter += 1
                    heapq.heappush(heap, (value, counter, 0, v))

        def dominated(e, t0, t1, sx, sy, sigma):
            lo, hi = edges[e]
            L = edge_len[e]
            tol = PRUNE_RTOL * (sigma + L)
            if dist[lo] + t1 < sigma + hypot(t1 - sx, sy) - tol:
                return True
            return dist[hi] + (L - t0) < sigma + hypot(t0 - sx, sy) - tol

        def push_window(e, f_from, t0, t1, sx, sy, sigma):
            nonlocal counter, n_windows
            fs = edge_faces[e]
            if len(fs) < 2 or t1 - t0 <= 1e-12 * edge_len[e]:
                return
            target = fs[1] if fs[0] == f_from else fs[0]
            if dominated(e, t0, t1, sx, sy, sigma):
                return
            if sx < t0:
                near = hypot(t0 - sx, sy)
            elif sx > t1:
                near = hypot(t1 - sx, sy)
            else:
                near = -sy
            counter += 1
            n_windows += 1
            heapq.heappush(heap, (sigma + near, counter, 1, (e, target, t0, t1, sx, sy, sigma, near)))

        def emit_from_vertex(v, d):
            for f in topo.vertex_faces[v]:
                k = face_opp[f].index(v)
                e = face_edges[f][k]
                a, b = edges[e]
                relax(a, d + float(np.linalg.norm(V[a] - V[v])))
                relax(b, d + float(np.linalg.norm(V[b] - V[v])))
                cx, cy = face_c2d[f][k]
                push_window(e, f, 0.0, edge_len[e], cx, -cy, d)

        while heap:
            key, _, kind, item = heapq.heappop(heap)
            if kind == 0:
                if key <= dist[item]:
                    emit_from_vertex(item, key)
                continue
            e, f, t0, t1, sx, sy, sigma, near = item
            if dominated(e, t0, t1, sx, sy, sigma):
                continue
            k = face_edges[f].index(e)
            c = face_opp[f][k]
            cx, cy = face_c2d[f][k]
            # every path through the window crosses face f; if C is closer
            # than the window's nearest point can be, C dominates it
            far_c = max(hypot(cx - t0, cy), hypot(cx - t1, cy))
            if dist[c] + far_c < sigma + near - PRUNE_RTOL * (sigma + far_c):
                continue
            lo, hi = edges[e]
            L = edge_len[e]
            pts = {lo: (0.0, 0.0), hi: (L, 0.0), c: (cx, cy)}
            r0x, r1x, ry = t0 - sx, t1 - sx, -sy
            for a, b in ((lo, c), (c, hi)):
                if a > b:
                    a, b = b, a
                ax, ay = pts[a]
                bx, by = pts[b]
                qx0, qy0 = ax - sx, ay - sy
                qx1, qy1 = bx - sx, by - sy
                # right of ray 0 (<= 0) and left of ray 1 (>= 0), linear in s
                s_lo, s_hi = _clip_halfplane(
                    r0x * qy0 - ry * qx0, r0x * qy1 - ry * qx1, 0.0, 1.0, upper=True
                )
                s_lo, s_hi = _clip_halfplane(
                    r1x * qy0 - ry * qx0, r1x * qy1 - ry * qx1, s_lo, s_hi, upper=False
                )
                if s_lo > s_hi + COVER_TOL:
                    continue
                if s_lo <= COVER_TOL:
                    relax(a, sigma + hypot(qx0, qy0))
                if s_hi >= 1.0 - COVER_TOL:
                    relax(b, sigma + hypot(qx1, qy1))
                child = topo.edge_index[(a, b)]
                L2 = edge_len[child]
                dx, dy = bx - ax, by - ay
                norm = hypot(dx, dy)
                ex, ey = dx / norm, dy / norm
                # source seen from the child's lower vertex, in the child's frame
                px, py = -qx0, -qy0
                new_sx = px * ex + py * ey
                new_sy = -abs(ex * py - ey * px)
                s_lo = min(max(s_lo, 0.0), 1.0)
                s_hi = min(max(s_hi, 0.0), 1.0)
                push_window(child, f, s_lo * L2, s_hi * L2, new_sx, new_sy, sigma)
        self.n_windows = n_windows
        return np.array(dist)


def _clip_halfplane(v0, v1, s_lo, s_hi, upper):
    """Restrict ``[s_lo, s_hi]`` to where ``v(s) <= 0`` (upper) or ``>= 0``."""
    slope = v1 - v0
    sign = 1.0 if upper else -1.0
    a0, sl = sign * v0, sign * slope
    # need a0 + s * sl <= 0
    if sl == 0.0:
        return (s_lo, s_hi) if a0 <= 0 else (1.0, 0.0)
    root = -a0 / sl
    if sl > 0:
        return s_lo, min(s_hi, root)
    return max(s_lo, root), s_hi


def subdivision_dijkstra(mesh, source, n_subdivisions=3):
    """Upper-bound distances via Dijkstra over Steiner-point graphs.

    Each edge is bisected ``n_subdivisions`` times, giving
    ``2**n_subdivisions - 1`` evenly spaced interior points; all points on the
    boundary of a face are connected by straight segments across it.
    """
    if int(n_subdivisions) < 0:
        raise ValueError(f"n_subdivisions must be >= 0, got {n_subdivisions}")
    V = mesh.vertices
    topo = _Topology(mesh)
    n_v = len(V)
    m = 2 ** int(n_subdivisions) - 1
    n_e = len(topo.edges)
    ts = np.arange(1, m + 1) / (m + 1)
    steiner = (
        V[topo.edges[:, 0]][:, None, :] * (1 - ts)[None, :, None]
        + V[topo.edges[:, 1]][:, None, :] * ts[None, :, None]
    ).reshape(-1, 3)
    pos = np.vstack([V, steiner])
    rows, cols = [], []
    for f in range(mesh.n_faces):
        ids = list(mesh.faces[f])
        for k in range(3):
            e = topo.face_edges[f, k]
            ids.extend(n_v + e * m + j for j in range(m))
        ids = np.array(ids)
        i, j = np.triu_indices(len(ids), 1)
        rows.append(ids[i])
        cols.append(ids[j])
    pairs = np.unique(np.sort(np.column_stack([np.concatenate(rows), np.concatenate(cols)]), axis=1), axis=0)
    rows, cols = pairs[:, 0], pairs[:, 1]
    w = np.linalg.norm(pos[rows] - pos[cols], axis=1)
    n = n_v + n_e * m
    G = coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
    d = dijkstra(G, directed=False, indices=int(source))
    return d[:n_v]


def geodesic_distance(mesh, source, method="exact", n_subdivisions=3):
    """Per-vertex geodesic distance from ``source``.

    ``method`` is ``"exact"`` (window propagation) or ``"subdivision"``.
    """
    if method == "exact":
        return ExactGeodesic(mesh).distances(source)
    if method == "subdivision":
        return subdivision_dijkstra(mesh, source, n_subdivisions)
    raise ValueError(f"unknown geodesic method {method!r}")
