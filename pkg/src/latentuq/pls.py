"""Two-block partial least squares between uncertainty maps and shapes."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._utils import fix_signs


class UncorrelatedBlocksError(ValueError):
    """The centred blocks have no cross-covariance left to explain."""


def _leading_pair(X, Y, tol, max_iter):
    """Leading singular vectors of ``X^T Y`` by alternating power iteration.

    Products go through the ``K``-row blocks, so ``X^T Y`` is never formed.
    """
    # deterministic start: the Y column of largest norm
    c = np.zeros(Y.shape[1])
    c[np.argmax(np.linalg.norm(Y, axis=0))] = 1.0
    for _ in range(max_iter):
        w = X.T @ (Y @ c)
        w /= np.linalg.norm(w)
        c_new = Y.T @ (X @ w)
        c_new /= np.linalg.norm(c_new)
        done = np.max(np.abs(c_new - c)) < tol
        c = c_new
        if done:
            break
    w = X.T @ (Y @ c)
    w /= np.linalg.norm(w)
    return w, c


class PLSModes(TransformerMixin, BaseEstimator):
    """Covariance-maximising paired modes of two blocks (NIPALS, symmetric deflation).

    Both blocks are centred but not scaled. For each mode the weights ``w``
    (X side) and ``c`` (Y side) are the leading singular pair of the residual
    cross-covariance; scores are ``t = X w`` and ``u = Y c``; X is deflated on
    ``t`` and Y on ``u``.

    Parameters
    ----------
    n_modes : int, default=3
    tol : float, default=1e-13
        Power-iteration stopping tolerance on the weight change.
    max_iter : int, default=10000

    Attributes
    ----------
    x_mean_, y_mean_ : ndarray
    x_weights_, y_weights_ : ndarray of shape (p, n_modes), (q, n_modes)
    x_loadings_, y_loadings_ : ndarray
    x_scores_, y_scores_ : ndarray of shape (K, n_modes)
    covariances_ : ndarray of shape (n_modes,)
        ``t^T u / (K - 1)`` per mode.
    explained_covariance_ratio_ : ndarray of shape (n_modes,)
        Squared mode covariance over the squared Frobenius norm of the
        original cross-covariance.
    """

    def __init__(self, n_modes=3, tol=1e-13, max_iter=10000):
        self.n_modes = n_modes
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, Y):
        X = check_array(X, ensure_min_samples=2)
        Y = check_array(Y, ensure_min_samples=2)
        K = X.shape[0]
        if Y.shape[0] != K:
            raise ValueError(f"X has {K} rows but Y has {Y.shape[0]}")
        n_modes = int(self.n_modes)
        limit = min(K - 1, X.shape[1], Y.shape[1])
        if not 1 <= n_modes <= limit:
            raise ValueError(f"n_modes must lie in [1, {limit}], got {n_modes}")
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = Y.mean(axis=0)
        Xr = X - self.x_mean_
        Yr = Y - self.y_mean_
        total = np.linalg.norm(Xr.T @ Yr) / (K - 1)
        scale = max(np.abs(Xr).max(), np.abs(Yr).max(), 1.0)
        if total <= 1e-12 * scale * scale:
            raise UncorrelatedBlocksError("uncorrelated blocks: the cross-covariance is zero")

        W, C, P, Q, T, U, cov = [], [], [], [], [], [], []
        for mode in range(n_modes):
            if np.linalg.norm(Xr.T @ Yr) / (K - 1) <= 1e-12 * total:
                raise UncorrelatedBlocksError(f"uncorrelated blocks: no cross-covariance left for mode {mode + 1}")
            w, c = _leading_pair(Xr, Yr, self.tol, int(self.max_iter))
            w = fix_signs(w[:, None])[:, 0]
            t = Xr @ w
            u = Yr @ c
            # keep the pair consistent: t^T u > 0
            if t @ u < 0:
                c = -c
                u = -u
            p = Xr.T @ t / (t @ t)
            q = Yr.T @ u / (u @ u)
            Xr = Xr - np.outer(t, p)
            Yr = Yr - np.outer(u, q)
            W.append(w)
            C.append(c)
            P.append(p)
            Q.append(q)
            T.append(t)
            U.append(u)
            cov.append(t @ u / (K - 1))
        self.x_weights_ = np.column_stack(W)
        self.y_weights_ = np.column_stack(C)
        self.x_loadings_ = np.column_stack(P)
        self.y_loadings_ = np.column_stack(Q)
        self.x_scores_ = np.column_stack(T)
        self.y_scores_ = np.column_stack(U)
        self.covariances_ = np.array(cov)
        self.explained_covariance_ratio_ = self.covariances_**2 / total**2
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X, Y=None):
        """X-block scores of new rows, applying the stored deflation sequence."""
        check_is_fitted(self, "x_weights_")
        Xr = check_array(X) - self.x_mean_
        scores = np.zeros((Xr.shape[0], self.x_weights_.shape[1]))
        for k in range(scores.shape[1]):
            scores[:, k] = Xr @ self.x_weights_[:, k]
            Xr = Xr - np.outer(scores[:, k], self.x_loadings_[:, k])
        return scores

    def fit_transform(self, X, Y=None):
        return self.fit(X, Y).x_scores_

    def reconstruct_mode(self, mode, t=2.0):
        """Block means plus ``t`` score standard deviations along ``mode`` (1-based).

        Returns ``(x, y)``; ``t = +-2`` gives the usual two-sigma extremes.
        """
        check_is_fitted(self, "x_weights_")
        n = self.x_weights_.shape[1]
        if not 1 <= mode <= n:
            raise ValueError(f"mode must lie in [1, {n}], got {mode}")
        k = mode - 1
        sx = np.std(self.x_scores_[:, k], ddof=1)
        sy = np.std(self.y_scores_[:, k], ddof=1)
        x = self.x_mean_ + t * sx * self.x_loadings_[:, k]
        y = self.y_mean_ + t * sy * self.y_loadings_[:, k]
        return x, y
