"""Triangle surface meshes with anatomical annotations, OFF and JSON I/O."""

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix


class MeshError(ValueError):
    """A mesh violates a structural invariant."""


@dataclass
class TriMesh:
    """Vertices (``V x 3``, mm) and counter-clockwise faces (``F x 3``).

    Optional annotations: ``apex`` vertex, ``tricuspid_loop`` and
    ``pulmonary_loop`` (ordered boundary cycles), per-vertex ``zones``.
    """

    vertices: np.ndarray
    faces: np.ndarray
    apex: int = None
    tricuspid_loop: list = field(default_factory=list)
    pulmonary_loop: list = field(default_factory=list)
    zones: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.zones is not None:
            self.zones = np.asarray(self.zones, dtype=np.int64)
        self.tricuspid_loop = [int(v) for v in self.tricuspid_loop]
        self.pulmonary_loop = [int(v) for v in self.pulmonary_loop]
        if self.apex is not None:
            self.apex = int(self.apex)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def with_vertices(self, vertices):
        return replace(self, vertices=np.array(vertices, dtype=float))

    def copy(self):
        return replace(
            self,
            vertices=self.vertices.copy(),
            faces=self.faces.copy(),
            tricuspid_loop=list(self.tricuspid_loop),
            pulmonary_loop=list(self.pulmonary_loop),
            zones=None if self.zones is None else self.zones.copy(),
        )

    # geometry -------------------------------------------------------------

    def face_cross(self):
        p = self.vertices[self.faces]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_cross(), axis=1)

    def face_normals(self):
        c = self.face_cross()
        n = np.linalg.norm(c, axis=1, keepdims=True)
        if np.any(n == 0):
            bad = np.flatnonzero(n[:, 0] == 0)
            raise MeshError(f"degenerate faces: {bad.tolist()}")
        return c / n

    def face_centroids(self):
        return self.vertices[self.faces].mean(axis=1)

    def vertex_areas(self):
        """Barycentric vertex areas (one third of every incident face)."""
        a = np.zeros(self.n_vertices)
        np.add.at(a, self.faces.ravel(), np.repeat(self.face_areas() / 3.0, 3))
        return a

    # topology -------------------------------------------------------------

    def edge_faces(self):
        """Map ``(min, max)`` vertex pairs to the list of incident faces."""
        out = defaultdict(list)
        for f, (a, b, c) in enumerate(self.faces.tolist()):
            for u, v in ((a, b), (b, c), (c, a)):
                out[(u, v) if u < v else (v, u)].append(f)
        return dict(out)

    def edges(self):
        return np.array(sorted(self.edge_faces()), dtype=np.int64).reshape(-1, 2)

    def boundary_edges(self):
        return [e for e, fs in self.edge_faces().items() if len(fs) == 1]

    def adjacency(self):
        """Sparse symmetric vertex adjacency (0/1)."""
        e = self.edges()
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        A = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
        A.data[:] = 1.0
        return A

    def face_neighbors(self):
        nbrs = [[] for _ in range(self.n_faces)]
        for fs in self.edge_faces().values():
            if len(fs) == 2:
                nbrs[fs[0]].append(fs[1])
                nbrs[fs[1]].append(fs[0])
        return [sorted(n) for n in nbrs]

    def boundary_loops(self):
        """Ordered boundary cycles, each starting at its smallest vertex."""
        directed = set()
        for f in self.faces.tolist():
            directed.update(((f[0], f[1]), (f[1], f[2]), (f[2], f[0])))
        # a boundary edge (u, v) has no twin (v, u); walk them as cycles
        succ = {}
        for u, v in directed:
            if (v, u) not in directed:
                if v in succ:
                    raise MeshError(f"boundary vertex {v} is pinched")
                succ[v] = u
        loops, seen = [], set()
        for start in sorted(succ):
            if start in seen:
                continue
            loop, v = [], start
            while v not in seen:
                seen.add(v)
                loop.append(v)
                v = succ[v]
            if v != start:
                raise MeshError(f"boundary starting at {start} does not close")
            loops.append(loop)
        return loops

    def validate(self):
        """Raise :class:`MeshError` on the first violated invariant."""
        n = self.n_vertices
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= n):
            raise MeshError("face index out of range")
        if np.any(self.faces[:, 0] == self.faces[:, 1]) or np.any(self.faces[:, 1] == self.faces[:, 2]) or np.any(self.faces[:, 0] == self.faces[:, 2]):
            raise MeshError("face with repeated vertex")
        seen = set()
        for f in self.faces.tolist():
            for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                if (u, v) in seen:
                    raise MeshError(f"edge ({u}, {v}) used twice in the same direction: inconsistent orientation or non-manifold")
                seen.add((u, v))
        for e, fs in self.edge_faces().items():
            if len(fs) > 2:
                raise MeshError(f"non-manifold edge {e}")
        loops = self.boundary_loops()
        boundary = {v for loop in loops for v in loop}
        if self.apex is not None and not 0 <= self.apex < n:
            raise MeshError("apex index out of range")
        for name in ("tricuspid_loop", "pulmonary_loop"):
            loop = getattr(self, name)
            if not loop:
                continue
            if any(not 0 <= v < n for v in loop):
                raise MeshError(f"{name} index out of range")
            if not set(loop) <= boundary:
                raise MeshError(f"{name} contains non-boundary vertices")
            edge_set = set(self.edge_faces())
            for u, v in zip(loop, loop[1:] + loop[:1]):
                if (min(u, v), max(u, v)) not in edge_set or len(self.edge_faces()[(min(u, v), max(u, v))]) != 1:
                    raise MeshError(f"{name} is not a closed boundary cycle at ({u}, {v})")
        if self.zones is not None and len(self.zones) != n:
            raise MeshError("one zone label per vertex is required")
        return self

    def graph_is_connected(self):
        A = self.adjacency()
        seen = np.zeros(self.n_vertices, dtype=bool)
        queue = deque([0])
        seen[0] = True
        while queue:
            v = queue.popleft()
            for w in A.indices[A.indptr[v]:A.indptr[v + 1]]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        return bool(seen.all())

    def annotations(self):
        return {
            "apex": self.apex,
            "tricuspid_loop": list(self.tricuspid_loop),
            "pulmonary_loop": list(self.pulmonary_loop),
            "zones": None if self.zones is None else self.zones.tolist(),
        }


def write_off(path, vertices, faces):
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(vertices)} {len(faces)} 0\n")
        for x, y, z in vertices.tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")
        for a, b, c in faces.tolist():
            fh.write(f"3 {a} {b} {c}\n")


def read_off(path):
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or not tokens[0].endswith("OFF"):
        raise MeshError(f"{path}: missing OFF header")
    head = tokens[0][3:] if tokens[0] != "OFF" else ""
    rest = ([head] if head else []) + tokens[1:]
    nv, nf = int(rest[0]), int(rest[1])
    pos = 3
    vertices = np.array(rest[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(rest[pos])
        if k != 3:
            raise MeshError(f"{path}: only triangles are supported, found a {k}-gon")
        faces.append([int(t) for t in rest[pos + 1:pos + 4]])
        pos += 4
    return vertices, np.array(faces, dtype=np.int64).reshape(-1, 3)


def save_mesh(path, mesh):
    """Write ``<path>`` (OFF) and the annotation sidecar ``<path>.json``."""
    path = Path(path)
    write_off(path, mesh.vertices, mesh.faces)
    with open(path.with_suffix(".json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(mesh.annotations(), fh, sort_keys=True)
        fh.write("\n")


def load_mesh(path, annotations=None):
    """Read an OFF mesh plus its JSON sidecar when present."""
    path = Path(path)
    vertices, faces = read_off(path)
    side = Path(annotations) if annotations is not None else path.with_suffix(".json")
    ann = {}
    if side.exists():
        with open(side, encoding="utf-8") as fh:
            ann = json.load(fh)
    return TriMesh(
        vertices,
        faces,
        apex=ann.get("apex"),
        tricuspid_loop=ann.get("tricuspid_loop") or [],
        pulmonary_loop=ann.get("pulmonary_loop") or [],
        zones=ann.get("zones"),
    )
