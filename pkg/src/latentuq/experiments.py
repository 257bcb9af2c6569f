"""Population-level experiments: strain descriptors and the noisy-zone study.

In the noisy-zone study the two descriptors are the original strain and the
same strain with noise injected in one zone; the noisy descriptor is the one
reconstructed, so its uncertainty map shows where the two disagree.
"""

from dataclasses import dataclass

import numpy as np

from ._utils import derive_seed
from .estimator import LatentUncertainty
from .mesh.directions import direction_field
from .strain import N_ZONES, add_region_noise, compute_strain, zone_uncertainty_table

COMPONENTS = ("longitudinal", "circumferential")


def population_strain(population, methods=("long_axis",)):
    """Vertex strain (%) per method and component.

    Returns ``{(method, component): K x V array}``.
    """
    out = {(m, c): [] for m in methods for c in COMPONENTS}
    for s in population.subjects:
        for m in methods:
            field = compute_strain(s.ed, s.es, directions=direction_field(s.ed, m))
            out[m, "longitudinal"].append(field.vertex_longitudinal)
            out[m, "circumferential"].append(field.vertex_circumferential)
    return {k: np.stack(v) for k, v in out.items()}


def noisy_copy(X, mask, alpha, seed, sample_ids, zone):
    """Row-wise :func:`add_region_noise` with per-(zone, subject) seeds."""
    return np.stack(
        [add_region_noise(x, mask, alpha, derive_seed(seed, "noise", zone, sid)) for x, sid in zip(X, sample_ids)]
    )


def pair_uncertainty(X_ref, X_other, sample_ids, **params):
    """Uncertainty maps of ``X_other`` aligned against ``X_ref``; ``K x V``."""
    est = LatentUncertainty(reference=1, **params)
    return est.fit([X_ref, X_other], sample_ids=sample_ids).uncertainty_


@dataclass
class NoiseTable:
    """``rows[z-1]`` holds the zone means with noise in zone ``z``; ``baseline`` the comparison row."""

    rows: np.ndarray
    baseline: np.ndarray
    baseline_label: str

    def diagonal_dominant(self):
        """Every row's noisy zone strictly exceeds all other zones of that row."""
        for i, row in enumerate(self.rows):
            if not row[i] > np.delete(row, i).max():
                return False
        return True

    def to_rows(self):
        labels = [f"noise_zone_{z}" for z in range(1, len(self.rows) + 1)] + [f"baseline:{self.baseline_label}"]
        return labels, np.vstack([self.rows, self.baseline[None, :]])


def noise_table(X, zones, sample_ids, alpha=1.0, seed=0, baseline=0.01, n_zones=N_ZONES, **params):
    """Mean uncertainty per zone with noise injected in each zone in turn.

    ``baseline`` is either a noise level applied over the whole surface or a
    ``K x V`` second descriptor (another strain computation) compared with
    ``X`` the same way.
    """
    zones = np.asarray(zones)
    present = set(np.unique(zones).tolist())
    missing = [z for z in range(1, n_zones + 1) if z not in present]
    if missing:
        raise ValueError(f"zones without vertices: {missing}")
    rows = []
    for z in range(1, n_zones + 1):
        noisy = noisy_copy(X, zones == z, alpha, seed, sample_ids, z)
        U = pair_uncertainty(X, noisy, sample_ids, random_state=seed, **params)
        rows.append(zone_uncertainty_table(U, zones, n_zones))
    if np.isscalar(baseline):
        other = noisy_copy(X, np.ones(X.shape[1], dtype=bool), float(baseline), seed, sample_ids, 0)
        label = f"noise:{float(baseline)!r}"
    else:
        other = np.asarray(baseline, dtype=float)
        label = "descriptor"
    base = zone_uncertainty_table(pair_uncertainty(X, other, sample_ids, random_state=seed, **params), zones, n_zones)
    return NoiseTable(np.array(rows), base, label)


def alpha_sweep(X, zones, sample_ids, zone=1, alphas=(0.1, 0.5, 1.0), seed=0, n_zones=N_ZONES, **params):
    """Population-mean uncertainty maps for increasing noise in one zone.

    The noise draws are shared across ``alphas``; only their scale changes.
    Returns ``(maps, zone_means)`` with shapes ``(len(alphas), V)`` and
    ``(len(alphas), n_zones)``.
    """
    zones = np.asarray(zones)
    if not np.any(zones == zone):
        raise ValueError(f"zone {zone} has no vertices")
    maps, means = [], []
    for a in alphas:
        noisy = noisy_copy(X, zones == zone, a, seed, sample_ids, zone)
        U = pair_uncertainty(X, noisy, sample_ids, random_state=seed, **params)
        maps.append(U.mean(axis=0))
        means.append(zone_uncertainty_table(U, zones, n_zones))
    return np.array(maps), np.array(means)
