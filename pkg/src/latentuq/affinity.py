"""Per-descriptor affinity matrices and cross-descriptor correspondences.

Every descriptor of a population (``K`` samples, ``D`` dimensions) gets a
dense Gaussian affinity matrix whose width is the mean distance of each
sample to its ``k_sigma``-th neighbour. Pairs of descriptors are linked by
correspondence matrices: cosine similarity between affinity rows, sparsified
to the ``k_M`` strongest entries per row.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._utils import as_float_matrix


class DegenerateDescriptorError(ValueError):
    """All samples of a descriptor coincide, so no kernel width exists."""


class DisconnectedSampleError(ValueError):
    """An affinity row has zero norm."""


@dataclass
class DescriptorSet:
    """``M`` descriptors of the same ``K`` samples, each ``K x D``."""

    descriptors: list
    descriptor_names: list = None
    sample_ids: list = None

    def __post_init__(self):
        if len(self.descriptors) == 0:
            raise ValueError("at least one descriptor is required")
        self.descriptors = [
            as_float_matrix(X, name=f"descriptor {m}") for m, X in enumerate(self.descriptors)
        ]
        shapes = {X.shape for X in self.descriptors}
        if len(shapes) != 1:
            raise ValueError(f"descriptors must share K and D, got shapes {sorted(shapes)}")
        K = self.n_samples
        if self.descriptor_names is None:
            self.descriptor_names = [f"descriptor_{m}" for m in range(self.n_descriptors)]
        if self.sample_ids is None:
            self.sample_ids = [str(i) for i in range(K)]
        self.descriptor_names = [str(n) for n in self.descriptor_names]
        self.sample_ids = [str(s) for s in self.sample_ids]
        if len(self.descriptor_names) != self.n_descriptors:
            raise ValueError("one name per descriptor is required")
        if len(set(self.descriptor_names)) != self.n_descriptors:
            raise ValueError("descriptor names must be unique")
        if len(self.sample_ids) != K:
            raise ValueError(f"expected {K} sample ids, got {len(self.sample_ids)}")

    @property
    def n_descriptors(self):
        return len(self.descriptors)

    @property
    def n_samples(self):
        return self.descriptors[0].shape[0]

    @property
    def n_features(self):
        return self.descriptors[0].shape[1]

    def index(self, name):
        return self.descriptor_names.index(name)

    @classmethod
    def from_csv(cls, paths, sample_ids_path=None, names=None):
        """Load one CSV per descriptor (header row, ``K`` rows by ``D`` columns)."""
        paths = [Path(p) for p in paths]
        loaded = [read_matrix_csv(p, with_ids=True) for p in paths]
        if names is None:
            names = [p.stem for p in paths]
        ids = read_sample_ids(sample_ids_path) if sample_ids_path is not None else None
        for p, (_, _, file_ids) in zip(paths, loaded):
            if file_ids is None:
                continue
            if ids is None:
                ids = file_ids
            elif file_ids != ids:
                raise ValueError(f"{p}: sample ids differ from the other descriptors")
        return cls([X for _, X, _ in loaded], names, ids)


def read_matrix_csv(path, with_ids=False):
    """Read a numeric CSV with a header row.

    A leading ``sample_id`` column is split off. Returns ``(header, matrix)``,
    or ``(header, matrix, sample_ids)`` when ``with_ids`` is true (ids are
    ``None`` if the column is absent).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        has_ids = bool(header) and header[0] == "sample_id"
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            if has_ids:
                ids.append(row[0])
                row = row[1:]
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if has_ids:
        header = header[1:]
    X = np.array(rows, dtype=float).reshape(len(rows), len(header))
    if with_ids:
        return header, X, ids if has_ids else None
    return header, X


def write_matrix_csv(path, X, header=None, sample_ids=None):
    """Write floats with ``repr`` precision; ``sample_ids`` adds a leading column."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if header is None:
        header = [f"x_{j + 1}" for j in range(X.shape[1])]
    if sample_ids is not None and len(sample_ids) != X.shape[0]:
        raise ValueError(f"{len(sample_ids)} sample ids for {X.shape[0]} rows")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow((["sample_id"] if sample_ids is not None else []) + list(header))
        for i, row in enumerate(X):
            lead = [sample_ids[i]] if sample_ids is not None else []
            writer.writerow(lead + [repr(float(v)) for v in row])


def read_sample_ids(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty sample id file")
    if rows[0][0] == "sample_id":
        rows = rows[1:]
    return [r[0] for r in rows]


def write_sample_ids(path, sample_ids):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id"])
        for s in sample_ids:
            writer.writerow([s])


def kernel_width(X, k_sigma):
    """Mean distance of every sample to its ``k_sigma``-th nearest other sample.

    Parameters
    ----------
    X : array of shape (K, D)
    k_sigma : int
        Neighbour rank, ``1 <= k_sigma < K``.

    Returns
    -------
    sigma : float
    """
    X = as_float_matrix(X)
    K = X.shape[0]
    k_sigma = int(k_sigma)
    if not 1 <= k_sigma < K:
        raise ValueError(f"k_sigma must satisfy 1 <= k_sigma < K={K}, got {k_sigma}")
    dist = squareform(pdist(X))
    np.fill_diagonal(dist, np.inf)
    # stable sort: equal distances keep sample order
    kth = np.sort(dist, axis=1, kind="stable")[:, k_sigma - 1]
    sigma = float(np.mean(kth))
    if not sigma > 0:
        raise DegenerateDescriptorError("degenerate descriptor: kernel width is zero")
    return sigma


def gaussian_affinity(X, sigma):
    """``W_ij = exp(-||x_i - x_j||^2 / sigma^2)``, symmetric with unit diagonal."""
    X = as_float_matrix(X)
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    sq = squareform(pdist(X, "sqeuclidean"))
    W = np.exp(-sq / sigma**2)
    np.fill_diagonal(W, 1.0)
    return W


def cosine_rows(A, B):
    """Cosine similarity between every row of ``A`` and every row of ``B``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    bad = np.flatnonzero(na == 0).tolist() + np.flatnonzero(nb == 0).tolist()
    if bad:
        raise DisconnectedSampleError(f"disconnected sample(s): {sorted(set(bad))}")
    return (A @ B.T) / np.outer(na, nb)


def keep_top_k(C, k):
    """Zero all but the ``k`` largest entries of every row (ties: lower column)."""
    K = C.shape[1]
    order = np.argsort(-C, axis=1, kind="stable")[:, :k]
    out = np.zeros_like(C)
    rows = np.arange(C.shape[0])[:, None]
    out[rows, order] = C[rows, order]
    return out


def correspondence_matrix(W_m, W_n, k_M):
    """Row-sparsified cosine correspondence between two affinity matrices.

    Entry ``(i, j)`` is the cosine similarity of row ``i`` of ``W_m`` and row
    ``j`` of ``W_n``; only the ``k_M`` largest entries of each row survive.
    The result is not symmetrized; see :func:`build_affinity_graph`.
    """
    W_m = as_float_matrix(W_m, "W_m")
    W_n = as_float_matrix(W_n, "W_n")
    if W_m.shape != W_n.shape or W_m.shape[0] != W_m.shape[1]:
        raise ValueError("affinity matrices must be square and of equal size")
    K = W_m.shape[0]
    if not 1 <= int(k_M) < K:
        raise ValueError(f"k_M must satisfy 1 <= k_M < K={K}, got {k_M}")
    C = np.clip(cosine_rows(W_m, W_n), 0.0, 1.0)
    return keep_top_k(C, int(k_M))


@dataclass
class AffinityGraph:
    """Affinities ``W[m]`` and symmetric-paired correspondences ``Mcorr[(m, n)]``."""

    W: list
    Mcorr: dict
    sigma: list
    k_sigma: int
    k_M: int
    mu: float
    raw_correspondence: dict = field(default=None, repr=False)

    @property
    def n_descriptors(self):
        return len(self.W)

    @property
    def n_samples(self):
        return self.W[0].shape[0]


def build_affinity_graph(descriptors, k_sigma=10, k_M=10, mu=1.0):
    """Compute all affinity and correspondence matrices of a descriptor set.

    Each ordered pair ``(m, n)`` is first sparsified row-wise; the pair is
    then merged as ``max(S_mn, S_nm^T)`` and stored with
    ``Mcorr[(n, m)] = Mcorr[(m, n)].T``. Merging with the maximum keeps every
    retained neighbour of either direction and makes the block matrix
    invariant to swapping two identical descriptors.
    """
    if not isinstance(descriptors, DescriptorSet):
        descriptors = DescriptorSet(list(descriptors))
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    sigma = [kernel_width(X, k_sigma) for X in descriptors.descriptors]
    W = [gaussian_affinity(X, s) for X, s in zip(descriptors.descriptors, sigma)]
    M = len(W)
    raw = {}
    for m in range(M):
        for n in range(M):
            if m != n:
                raw[(m, n)] = correspondence_matrix(W[m], W[n], k_M)
    Mcorr = {}
    for m in range(M):
        for n in range(m + 1, M):
            merged = np.maximum(raw[(m, n)], raw[(n, m)].T)
            Mcorr[(m, n)] = merged
            Mcorr[(n, m)] = merged.T.copy()
    return AffinityGraph(W, Mcorr, sigma, int(k_sigma), int(k_M), float(mu), raw)
