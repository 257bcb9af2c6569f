"""Joint spectral embedding of several descriptors (manifold alignment).

The affinities of ``M`` descriptors are stacked into one ``MK x MK`` block
matrix (``W^m`` on the diagonal, ``mu * Mcorr^{mn}`` off it). The embedding
minimises

    E(Z) = sum_m sum_ij ||z_i^m - z_j^m||^2 W_ij^m
           + mu sum_{m != n} sum_ij ||z_i^m - z_j^n||^2 Mcorr_ij^{mn}

under ``Z^T D Z = I``, i.e. the generalized problem ``L f = lambda D f``.
It is solved through the symmetric matrix ``P = D^-1/2 W D^-1/2`` whose
eigenvalues are ``1 - lambda``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._utils import fix_signs
from .affinity import AffinityGraph, DescriptorSet, build_affinity_graph

TRIVIAL_TOL = 1e-9
TIE_TOL = 1e-12


class DisconnectedGraphError(ValueError):
    """The block graph splits into several components."""


@dataclass
class BlockGraph:
    blocks: np.ndarray
    degree: np.ndarray
    M: int
    K: int


@dataclass
class AlignedEmbedding:
    """Per-descriptor latent coordinates from one joint eigenproblem.

    ``eigenvalues`` holds the ``d + 1`` leading eigenvalues of ``P``
    (descending), the first being the removed trivial value 1.
    """

    Z: list
    eigenvalues: np.ndarray
    d: int
    params: dict = field(default_factory=dict)

    @property
    def stacked(self):
        return np.vstack(self.Z)

    @property
    def laplacian_eigenvalues(self):
        return 1.0 - self.eigenvalues


def assemble_block(graph):
    """Stack an :class:`AffinityGraph` into the ``MK x MK`` block matrix."""
    M, K = graph.n_descriptors, graph.n_samples
    blocks = np.zeros((M * K, M * K))
    for m in range(M):
        blocks[m * K:(m + 1) * K, m * K:(m + 1) * K] = graph.W[m]
        for n in range(M):
            if n != m:
                blocks[m * K:(m + 1) * K, n * K:(n + 1) * K] = graph.mu * graph.Mcorr[(m, n)]
    return block_from_matrix(blocks, M, K)


def block_from_matrix(blocks, M=1, K=None):
    blocks = np.asarray(blocks, dtype=float)
    if K is None:
        K = blocks.shape[0] // M
    if blocks.shape != (M * K, M * K):
        raise ValueError(f"block matrix shape {blocks.shape} does not match M={M}, K={K}")
    if not np.array_equal(blocks, blocks.T):
        raise ValueError("block matrix must be exactly symmetric")
    if np.any(blocks < 0):
        raise ValueError("block matrix must be nonnegative")
    degree = blocks.sum(axis=1)
    zero = np.flatnonzero(degree <= 0)
    if zero.size:
        raise DisconnectedGraphError(f"disconnected block graph: zero degree at rows {zero.tolist()}")
    n_comp, labels = connected_components(csr_matrix(blocks != 0), directed=False)
    if n_comp > 1:
        parts = []
        for c in range(n_comp):
            rows = np.flatnonzero(labels == c)
            desc = sorted({int(r) // K for r in rows})
            parts.append(f"component {c}: {rows.size} nodes in descriptor(s) {desc}")
        raise DisconnectedGraphError("disconnected block graph; " + "; ".join(parts))
    return BlockGraph(blocks, degree, M, K)


def symmetric_eigh(P):
    """All eigenpairs of a symmetric matrix, eigenvalues in descending order."""
    w, V = np.linalg.eigh(P)
    return w[::-1].copy(), V[:, ::-1].copy()


def _order_ties(w, V):
    # within runs of numerically equal eigenvalues, order by argmax |entry|
    order = np.arange(len(w))
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop - 1] - w[stop] < TIE_TOL:
            stop += 1
        if stop - start > 1:
            key = np.argmax(np.abs(V[:, start:stop]), axis=0)
            order[start:stop] = start + np.argsort(key, kind="stable")
        start = stop
    return w[order], V[:, order]


def _normalized_embedding(blocks, degree, d):
    n = blocks.shape[0]
    if not 1 <= d <= n - 1:
        raise ValueError(f"d must satisfy 1 <= d <= {n - 1}, got {d}")
    inv_sqrt = 1.0 / np.sqrt(degree)
    P = blocks * inv_sqrt[:, None] * inv_sqrt[None, :]
    P = 0.5 * (P + P.T)
    w, F = symmetric_eigh(P)
    if abs(w[0] - 1.0) > TRIVIAL_TOL:
        raise DisconnectedGraphError(f"leading eigenvalue {w[0]!r} differs from 1")
    if n > 1 and w[0] - w[1] < TRIVIAL_TOL:
        raise DisconnectedGraphError("disconnected graph: eigenvalue 1 has multiplicity > 1")
    w_rest, F_rest = _order_ties(w[1:], F[:, 1:])
    Z = F_rest[:, :d] * inv_sqrt[:, None]
    Z = fix_signs(Z, axis=0)
    eigenvalues = np.concatenate([[w[0]], w_rest[:d]])
    return Z, eigenvalues


def spectral_embed(block, d=2):
    """Solve the normalized-Laplacian eigenproblem of a :class:`BlockGraph`.

    The trivial pair (eigenvalue 1 of ``P``) is dropped and the next ``d``
    eigenvectors are mapped back with ``D^-1/2`` so that ``Z^T D Z = I``.
    Each column is signed so its largest-magnitude entry is positive.
    """
    Z, eigenvalues = _normalized_embedding(block.blocks, block.degree, int(d))
    K = block.K
    parts = [Z[m * K:(m + 1) * K] for m in range(block.M)]
    return AlignedEmbedding(parts, eigenvalues, int(d))


def laplacian_eigenmaps(W, d=2):
    """Normalized-Laplacian eigenmaps of a single affinity matrix ``W``."""
    block = block_from_matrix(W, 1)
    Z, _ = _normalized_embedding(block.blocks, block.degree, int(d))
    return Z


def alignment_energy(embedding, graph):
    """Evaluate the alignment objective ``E(Z)`` for given coordinates."""
    Z = embedding.Z if isinstance(embedding, AlignedEmbedding) else list(embedding)
    M = graph.n_descriptors
    if len(Z) != M or any(z.shape[0] != graph.n_samples for z in Z):
        raise ValueError("embedding and graph dimensions disagree")

    def pair_energy(A, B, weights):
        sq = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        return float(np.sum(np.maximum(sq, 0.0) * weights))

    energy = 0.0
    for m in range(M):
        energy += pair_energy(Z[m], Z[m], graph.W[m])
        for n in range(M):
            if n != m:
                energy += graph.mu * pair_energy(Z[m], Z[n], graph.Mcorr[(m, n)])
    return energy


class ManifoldAlignment(TransformerMixin, BaseEstimator):
    """Align the latent spaces of several descriptors of the same samples.

    Parameters
    ----------
    mu : float, default=1.0
        Weight of the cross-descriptor correspondence term.
    k_sigma : int, default=10
        Neighbour rank setting each Gaussian kernel width.
    k_M : int, default=10
        Correspondences kept per row.
    n_components : int, default=2
        Latent dimensionality ``d``.

    Attributes
    ----------
    graph_ : AffinityGraph
    block_ : BlockGraph
    embedding_ : AlignedEmbedding
    eigenvalues_ : ndarray of shape (n_components + 1,)
    """

    def __init__(self, mu=1.0, k_sigma=10, k_M=10, n_components=2):
        self.mu = mu
        self.k_sigma = k_sigma
        self.k_M = k_M
        self.n_components = n_components

    def fit(self, X, y=None):
        """Fit on a list of ``K x D`` descriptor matrices (or a DescriptorSet)."""
        descriptors = X if isinstance(X, DescriptorSet) else DescriptorSet(list(X))
        graph = build_affinity_graph(descriptors, self.k_sigma, self.k_M, self.mu)
        self.graph_ = graph
        self.block_ = assemble_block(graph)
        emb = spectral_embed(self.block_, self.n_components)
        emb.params = {
            "mu": float(self.mu),
            "k_sigma": int(self.k_sigma),
            "k_M": int(self.k_M),
            "d": int(self.n_components),
        }
        self.embedding_ = emb
        self.eigenvalues_ = emb.eigenvalues
        self.n_descriptors_ = descriptors.n_descriptors
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_.Z

    def transform(self, X=None):
        # transductive: only the training samples have coordinates
        check_is_fitted(self, "embedding_")
        return self.embedding_.Z

    def energy(self):
        check_is_fitted(self, "embedding_")
        return alignment_energy(self.embedding_, self.graph_)


__all__ = [
    "AffinityGraph",
    "AlignedEmbedding",
    "BlockGraph",
    "DisconnectedGraphError",
    "ManifoldAlignment",
    "alignment_energy",
    "assemble_block",
    "laplacian_eigenmaps",
    "spectral_embed",
    "symmetric_eigh",
]
