"""Synthetic ventricle-like mesh populations with end-diastolic and end-systolic frames.

Every subject shares one template topology: a stretched UV sphere whose
south pole is the apex, whose lower half is a deep ellipsoidal cup and whose
upper half is a shallow dome. Two rectangular blocks of grid quads are cut
out of the dome to form the tricuspid and pulmonary openings, so the valve
loops are clean boundary cycles.

End-systole is obtained from end-diastole by pulling points toward the long
axis (tangential factor, with a smooth regional modulation) and shortening
the cavity toward the base plane. A random rigid pose is applied to both
frames.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .._utils import derive_seed
from ..mesh.trimesh import MeshError, TriMesh, load_mesh, save_mesh


@dataclass
class PopulationParams:
    """Generator parameters; ``(mean, std)`` pairs are sampled per subject.

    Sampled values are clipped to at least half their mean so radii and
    factors stay positive.
    """

    n_subjects: int = 100
    n_rings: int = 24
    n_sectors: int = 36
    radius_x: tuple = (30.0, 3.0)
    radius_y: tuple = (24.0, 3.0)
    depth: tuple = (60.0, 5.0)
    dome_height: tuple = (15.0, 2.0)
    contraction: tuple = (0.85, 0.05)
    shortening: tuple = (0.9, 0.03)
    regional_amplitude: float = 0.04
    pose_degrees: float = 10.0
    pose_translation: float = 5.0

    def validate(self):
        if int(self.n_subjects) < 1:
            raise ValueError(f"n_subjects must be >= 1, got {self.n_subjects}")
        if int(self.n_rings) < 8 or int(self.n_sectors) < 12:
            raise ValueError("template needs n_rings >= 8 and n_sectors >= 12")
        for name in ("radius_x", "radius_y", "depth", "dome_height", "contraction", "shortening"):
            mean, std = getattr(self, name)
            if not mean > 0 or std < 0:
                raise ValueError(f"{name} needs a positive mean and non-negative std, got {(mean, std)}")
        if self.regional_amplitude < 0 or self.pose_degrees < 0 or self.pose_translation < 0:
            raise ValueError("regional_amplitude, pose_degrees and pose_translation must be >= 0")
        return self

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)


@dataclass
class Subject:
    sample_id: str
    ed: TriMesh
    es: TriMesh
    shape: dict


@dataclass
class SyntheticPopulation:
    subjects: list
    params: PopulationParams
    seed: int

    @property
    def sample_ids(self):
        return [s.sample_id for s in self.subjects]

    @property
    def zones(self):
        return self.subjects[0].ed.zones

    def __len__(self):
        return len(self.subjects)


def ring_angles(n_rings, radius=27.0, depth=60.0, dome=15.0):
    """Polar angles spacing the rings evenly in arc length on a nominal profile."""
    fine = np.linspace(0.0, np.pi, 4001)
    z = np.where(fine <= np.pi / 2, -depth * np.cos(fine), -dome * np.cos(fine))
    r = radius * np.sin(fine)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(r), np.diff(z)))])
    return np.interp(np.linspace(0.0, arc[-1], n_rings + 1), arc, fine)


def template(n_rings=24, n_sectors=36):
    """Template topology on the unit sphere.

    The tricuspid opening replaces the polar cap of the dome (the last two
    rings), which also removes the sliver triangles of the pole fan; the
    pulmonary opening is a block of grid quads on the side of the dome.

    Returns ``(phi, theta, faces, apex, tricuspid_loop, pulmonary_loop,
    zones)`` with ``phi`` the polar angle measured from the apex.
    """
    R, S = int(n_rings), int(n_sectors)
    rings = ring_angles(R)
    vid = {}
    phi, theta = [0.0], [0.0]
    for i in range(1, R - 1):
        for j in range(S):
            vid[i, j] = len(phi)
            phi.append(rings[i])
            theta.append(2 * np.pi * j / S)
    apex = 0
    cap = R - 3
    # pulmonary block: rings [r0, r1), sectors [s0, s1)
    r0, r1 = cap - 4, cap - 1
    half = max(2, S // 12)
    s0, s1 = S // 2 - half, S // 2 + half

    faces = []
    for j in range(S):
        faces.append([apex, vid[1, (j + 1) % S], vid[1, j]])
    for i in range(1, cap):
        for j in range(S):
            if r0 <= i < r1 and s0 <= j < s1:
                continue
            a, b = vid[i, j], vid[i, (j + 1) % S]
            c, d = vid[i + 1, j], vid[i + 1, (j + 1) % S]
            # alternate the quad diagonal so the mesh has no preferred shear
            if (i + j) % 2:
                faces.append([a, b, d])
                faces.append([a, d, c])
            else:
                faces.append([a, b, c])
                faces.append([b, d, c])
    faces = np.array(faces, dtype=np.int64)
    phi = np.array(phi)
    theta = np.array(theta)
    used = np.unique(faces)
    remap = -np.ones(len(phi), dtype=np.int64)
    remap[used] = np.arange(len(used))
    faces = remap[faces]
    phi, theta = phi[used], theta[used]

    # boundary cycles oriented opposite to the adjacent faces' edges
    tricuspid = [int(remap[vid[cap, j]]) for j in range(S)]
    block = [vid[r0, j] for j in range(s1, s0 - 1, -1)]
    block += [vid[i, s0] for i in range(r0 + 1, r1 + 1)]
    block += [vid[r1, j] for j in range(s0 + 1, s1 + 1)]
    block += [vid[i, s1] for i in range(r1 - 1, r0, -1)]
    pulmonary = [int(remap[v]) for v in block]

    # 4 azimuthal quadrants x 2 height bands, labels 1..8
    quadrant = np.floor((theta % (2 * np.pi)) / (np.pi / 2)).astype(np.int64) % 4
    band = (phi >= 0.4 * np.pi).astype(np.int64)
    zones = 1 + quadrant + 4 * band
    return phi, theta, faces, int(remap[apex]), tricuspid, pulmonary, zones


def _surface(phi, theta, rx, ry, depth, dome, harmonics=None):
    """Map template angles onto the cup-and-dome surface."""
    radial = np.sin(phi)
    if harmonics is not None:
        radial = radial * (1.0 + harmonics)
    x = rx * radial * np.cos(theta)
    y = ry * radial * np.sin(theta)
    z = np.where(phi <= np.pi / 2, -depth * np.cos(phi), -dome * np.cos(phi))
    return np.column_stack([x, y, z])


def _draw(rng, pair):
    mean, std = pair
    return float(max(rng.normal(mean, std), 0.5 * mean))


def make_subject(index, seed, params, topology=None):
    """Generate subject ``index``; depends only on ``(seed, index, params)``."""
    if topology is None:
        topology = template(params.n_rings, params.n_sectors)
    phi, theta, faces, apex, tv, pv, zones = topology
    sample_id = f"subject_{index:03d}"
    rng = np.random.default_rng(derive_seed(seed, "population", sample_id))
    rx, ry = _draw(rng, params.radius_x), _draw(rng, params.radius_y)
    depth, dome = _draw(rng, params.depth), _draw(rng, params.dome_height)
    bulge = rng.normal(0.0, 0.05, size=2)
    phase = rng.uniform(0, 2 * np.pi, size=2)
    harmonics = bulge[0] * np.cos(2 * theta + phase[0]) * np.sin(phi) ** 2 + bulge[1] * np.cos(theta + phase[1]) * np.sin(phi)
    ed = _surface(phi, theta, rx, ry, depth, dome, harmonics)

    s = _draw(rng, params.contraction)
    short = _draw(rng, params.shortening)
    amp = params.regional_amplitude * rng.uniform(0.5, 1.5)
    reg_phase = rng.uniform(0, 2 * np.pi)
    local = s + amp * np.cos(theta + reg_phase) * np.sin(phi)
    es = ed.copy()
    es[:, :2] *= local[:, None]
    base = ed[:, 2].max()
    es[:, 2] = base + short * (ed[:, 2] - base)

    rot = Rotation.from_rotvec(np.deg2rad(params.pose_degrees) * _unit(rng.normal(size=3)) * rng.uniform(0, 1))
    shift = rng.normal(0.0, params.pose_translation, size=3)
    ed = rot.apply(ed) + shift
    es = rot.apply(es) + shift

    def mesh(v):
        return TriMesh(v, faces.copy(), apex=apex, tricuspid_loop=tv, pulmonary_loop=pv, zones=zones.copy())

    shape = {"radius_x": rx, "radius_y": ry, "depth": depth, "dome_height": dome, "contraction": s, "shortening": short}
    return Subject(sample_id, mesh(ed), mesh(es), shape)


def _unit(v):
    return v / np.linalg.norm(v)


def generate_population(params=None, seed=0):
    """Deterministic synthetic population; each subject uses its own derived seed."""
    params = (params or PopulationParams()).validate()
    topology = template(params.n_rings, params.n_sectors)
    subjects = [make_subject(i, seed, params, topology) for i in range(int(params.n_subjects))]
    return SyntheticPopulation(subjects, params, int(seed))


def write_population(population, directory):
    """Write ``<id>_ed.off``/``<id>_es.off`` with JSON sidecars, ``zones.csv`` and ``population.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for s in population.subjects:
        for phase, m in (("ed", s.ed), ("es", s.es)):
            name = f"{s.sample_id}_{phase}.off"
            save_mesh(directory / name, m)
            files.append(name)
    with open(directory / "zones.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("vertex,zone\n")
        for v, z in enumerate(population.zones.tolist()):
            fh.write(f"{v},{z}\n")
    meta = {
        "params": population.params.to_dict(),
        "seed": population.seed,
        "sample_ids": population.sample_ids,
        "shapes": {s.sample_id: s.shape for s in population.subjects},
    }
    with open(directory / "population.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return files


def read_population(directory):
    directory = Path(directory)
    meta_path = directory / "population.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{meta_path} not found; is this a population directory?")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    subjects = []
    for sid in meta["sample_ids"]:
        ed = load_mesh(directory / f"{sid}_ed.off")
        es = load_mesh(directory / f"{sid}_es.off")
        if ed.n_vertices != es.n_vertices or not np.array_equal(ed.faces, es.faces):
            raise MeshError(f"{sid}: end-diastolic and end-systolic meshes differ in topology")
        subjects.append(Subject(sid, ed, es, meta.get("shapes", {}).get(sid, {})))
    return SyntheticPopulation(subjects, PopulationParams.from_dict(meta["params"]), meta["seed"])
