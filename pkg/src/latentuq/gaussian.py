"""Per-sample latent Gaussians and seeded sampling.

For one subject, the ``M`` aligned latent points ``{z^1, ..., z^M}`` define a
Gaussian through PCA: mean = centroid, axes = principal directions,
``stds`` = square roots of the sample variances (divisor ``M - 1``) along
those axes. At most ``min(M - 1, d)`` axes carry variance and are kept.

Sampling is bit-reproducible: uniforms come from NumPy's PCG64 bit generator
(``Generator.random``, 53-bit doubles) and are turned into normal deviates with
the cosine branch of the Box-Muller transform,
``eps = sqrt(-2 log(1 - u1)) * cos(2 pi u2)``.
"""

from dataclasses import dataclass

import numpy as np

from ._utils import fix_signs

DEFAULT_DRAWS = 100


@dataclass
class LatentGaussian:
    mean: np.ndarray
    axes: np.ndarray
    stds: np.ndarray
    sample_id: str = None

    @property
    def rank(self):
        return len(self.stds)

    @property
    def degenerate(self):
        return bool(np.all(self.stds == 0))


def fit_sample_gaussian(points, sample_id=None):
    """Fit a Gaussian to the latent points of one subject.

    Parameters
    ----------
    points : array of shape (M, d)
        One aligned latent point per descriptor, ``M >= 2``.

    Returns
    -------
    LatentGaussian
        Axes are rows of an ``r x d`` orthonormal matrix with
        ``r = min(M - 1, d)``; standard deviations are sorted descending.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    M, d = points.shape
    if M < 2:
        raise ValueError(f"at least two latent points are needed, got {M}")
    if not np.all(np.isfinite(points)):
        raise ValueError("latent points contain non-finite values")
    mean = points.mean(axis=0)
    centered = points - mean
    _, s, Vt = np.linalg.svd(centered, full_matrices=True)
    r = min(M - 1, d)
    stds = np.zeros(r)
    k = min(r, len(s))
    stds[:k] = s[:k] / np.sqrt(M - 1)
    axes = fix_signs(Vt[:r], axis=1)
    return LatentGaussian(mean, axes, stds, sample_id)


def standard_normal(n, r, seed):
    """``n x r`` standard normal deviates via PCG64 + Box-Muller (cosine branch)."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random((n, r, 2))
    return np.sqrt(-2.0 * np.log1p(-u[..., 0])) * np.cos(2.0 * np.pi * u[..., 1])


def sample_latent(g, n=DEFAULT_DRAWS, seed=0):
    """Draw ``n`` latent points ``mean + sum_k eps_k std_k axis_k``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    eps = standard_normal(n, g.rank, seed)
    return g.mean[None, :] + (eps * g.stds[None, :]) @ g.axes
