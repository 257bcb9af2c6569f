"""Multiscale Gaussian kernel ridge regression and uncertainty reduction.

Reconstruction from the latent space runs coarse to fine: level 0 uses a
kernel width equal to the latent diameter and every following level halves
the width and fits the residual left by the previous levels. Predictions are
the sum over levels.
"""

import warnings

import numpy as np
from scipy.linalg import solve
from scipy.spatial.distance import cdist, pdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted


class CollapsedLatentSpaceError(ValueError):
    """All training latent points coincide."""


def gaussian_kernel(A, B, width):
    return np.exp(-cdist(A, B, "sqeuclidean") / width**2)


class MultiscaleKernelRidge(RegressorMixin, BaseEstimator):
    """Coarse-to-fine Gaussian kernel ridge regression.

    Parameters
    ----------
    n_levels : int, default=4
        Number of scales. Widths are ``diameter / 2**l``.
    ridge : float, default=1e-3
        Relative ridge; the regulariser added at each level is
        ``ridge * mean(diag(G))`` for the level's kernel matrix ``G``.

    Attributes
    ----------
    widths_ : ndarray of shape (n_levels,)
    coefs_ : list of ndarray, each (n_samples, n_targets)
    residual_norms_ : ndarray of shape (n_levels + 1,)
        Frobenius norm of the training residual before level 0 and after
        every level.
    """

    def __init__(self, n_levels=4, ridge=1e-3):
        self.n_levels = n_levels
        self.ridge = ridge

    def fit(self, Z, X):
        Z = check_array(Z, ensure_min_samples=2)
        X = check_array(X, ensure_2d=False)
        one_d = X.ndim == 1
        if one_d:
            X = X[:, None]
        if X.shape[0] != Z.shape[0]:
            raise ValueError(f"Z has {Z.shape[0]} rows but X has {X.shape[0]}")
        if self.ridge <= 0:
            raise ValueError(f"ridge must be positive, got {self.ridge}")
        if int(self.n_levels) < 1:
            raise ValueError(f"n_levels must be >= 1, got {self.n_levels}")
        dists = pdist(Z)
        diameter = float(dists.max())
        if diameter == 0:
            raise CollapsedLatentSpaceError("collapsed latent space: all latent points coincide")
        if np.any(dists == 0):
            warnings.warn("duplicate latent training points", RuntimeWarning, stacklevel=2)

        widths, coefs = [], []
        residual = X.copy()
        norms = [float(np.linalg.norm(residual))]
        n = Z.shape[0]
        for level in range(int(self.n_levels)):
            width = diameter / 2.0**level
            G = gaussian_kernel(Z, Z, width)
            lam = self.ridge * float(np.mean(np.diag(G)))
            A = solve(G + lam * np.eye(n), residual, assume_a="sym")
            residual = residual - G @ A
            widths.append(width)
            coefs.append(A)
            norms.append(float(np.linalg.norm(residual)))

        self.Z_train_ = Z
        self.widths_ = np.array(widths)
        self.coefs_ = coefs
        self.residual_norms_ = np.array(norms)
        self.one_d_ = one_d
        self.n_features_in_ = Z.shape[1]
        return self

    def predict(self, Z):
        check_is_fitted(self, "coefs_")
        Z = check_array(Z)
        if Z.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} latent dimensions, got {Z.shape[1]}")
        out = np.zeros((Z.shape[0], self.coefs_[0].shape[1]))
        for width, A in zip(self.widths_, self.coefs_):
            out += gaussian_kernel(Z, self.Z_train_, width) @ A
        return out[:, 0] if self.one_d_ else out


def uncertainty_map(model, latent_samples):
    """Dimension-wise standard deviation (divisor N-1) of reconstructions."""
    latent_samples = np.atleast_2d(np.asarray(latent_samples, dtype=float))
    if latent_samples.shape[0] < 2:
        raise ValueError("at least two latent samples are required")
    # reconstruct distinct points once: blocked matrix products may round
    # identical rows differently, and equal samples must give equal outputs
    unique, inverse = np.unique(latent_samples, axis=0, return_inverse=True)
    recon = model.predict(unique)
    if recon.ndim == 1:
        recon = recon[:, None]
    recon = recon[inverse.ravel()]
    # shifting by one reconstruction makes identical rows give exactly zero
    return np.std(recon - recon[:1], axis=0, ddof=1)


def direct_std_baseline(samples):
    """Per-dimension standard deviation across the raw descriptors of one subject."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] < 2:
        raise ValueError("at least two descriptors are required")
    return np.std(samples - samples[:1], axis=0, ddof=1)
