import numpy as np
import pytest

from latentuq.pls import PLSModes, UncorrelatedBlocksError


def _blocks(seed, K=40, p=12, q=9):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(K, 3))
    X = T @ rng.normal(size=(3, p)) + 0.3 * rng.normal(size=(K, p))
    Y = T @ rng.normal(size=(3, q)) + 0.3 * rng.normal(size=(K, q))
    return X, Y


def _oracle(X, Y):
    Xc, Yc = X - X.mean(0), Y - Y.mean(0)
    u, s, vt = np.linalg.svd(Xc.T @ Yc)
    return u[:, 0], vt[0], s


@pytest.mark.parametrize("seed", range(5))
def test_first_mode_matches_svd(seed):
    X, Y = _blocks(seed)
    m = PLSModes(n_modes=3).fit(X, Y)
    a, b, s = _oracle(X, Y)
    w, c = m.x_weights_[:, 0], m.y_weights_[:, 0]
    sign = np.sign(w @ a)
    assert np.abs(w - sign * a).max() < 1e-8
    assert np.abs(c - sign * b).max() < 1e-8
    assert m.covariances_[0] == pytest.approx(s[0] / (len(X) - 1), rel=1e-10)


def test_weights_unit_scores_orthogonal():
    X, Y = _blocks(11)
    m = PLSModes(n_modes=4).fit(X, Y)
    assert np.allclose(np.linalg.norm(m.x_weights_, axis=0), 1.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(m.y_weights_, axis=0), 1.0, atol=1e-12)
    G = m.x_scores_.T @ m.x_scores_
    off = G - np.diag(np.diag(G))
    assert np.abs(off).max() < 1e-8 * np.abs(G).max()
    assert np.all(np.diff(m.covariances_) <= 1e-12)
    assert np.all(np.diff(m.explained_covariance_ratio_) <= 1e-12)
    assert m.explained_covariance_ratio_.sum() <= 1 + 1e-12


def test_deflation_removes_extracted_direction():
    X, Y = _blocks(12)
    m = PLSModes(n_modes=1).fit(X, Y)
    t = m.x_scores_[:, 0]
    Xr = X - X.mean(0) - np.outer(t, m.x_loadings_[:, 0])
    u = m.y_scores_[:, 0]
    Yr = Y - Y.mean(0) - np.outer(u, m.y_loadings_[:, 0])
    w, c = m.x_weights_[:, 0], m.y_weights_[:, 0]
    assert abs((Xr @ w) @ (Yr @ c)) < 1e-8
    assert np.abs(Xr.T @ t).max() < 1e-8


def test_identical_blocks_principal_axis():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 6)) * [5, 3, 2, 1, 0.5, 0.1]
    m = PLSModes(n_modes=2).fit(X, X)
    evec = np.linalg.eigh(np.cov(X.T))[1][:, -1]
    assert abs(abs(m.x_weights_[:, 0] @ evec) - 1) < 1e-10
    assert np.corrcoef(m.x_scores_[:, 0], m.y_scores_[:, 0])[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_planted_rank_one_recovery():
    rng = np.random.default_rng(8)
    K, p, q = 60, 20, 15
    t = rng.normal(size=K)
    a = rng.normal(size=p)
    b = rng.normal(size=q)
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    X = np.outer(t, a) + 0.01 * np.std(t) * rng.normal(size=(K, p)) / np.sqrt(p)
    Y = np.outer(t, b) + 0.01 * np.std(t) * rng.normal(size=(K, q)) / np.sqrt(q)
    m = PLSModes(n_modes=1).fit(X, Y)
    ang = lambda u, v: np.degrees(np.arccos(min(1.0, abs(u @ v))))
    assert ang(m.x_weights_[:, 0], a) < 5 and ang(m.y_weights_[:, 0], b) < 5


def test_reconstruction():
    X, Y = _blocks(5)
    m = PLSModes().fit(X, Y)
    x0, y0 = m.reconstruct_mode(1, 0.0)
    assert np.array_equal(x0, m.x_mean_) and np.array_equal(y0, m.y_mean_)
    for mode in (1, 2, 3):
        xp, yp = m.reconstruct_mode(mode, 2.0)
        xm, ym = m.reconstruct_mode(mode, -2.0)
        assert np.abs((xp + xm) / 2 - m.x_mean_).max() <= 4 * np.finfo(float).eps * np.abs(m.x_mean_).max()
        assert np.abs((yp + ym) / 2 - m.y_mean_).max() <= 4 * np.finfo(float).eps * np.abs(m.y_mean_).max()
    with pytest.raises(ValueError, match="mode"):
        m.reconstruct_mode(4)


def test_transform_matches_training_scores():
    X, Y = _blocks(6)
    m = PLSModes().fit(X, Y)
    assert np.allclose(m.transform(X), m.x_scores_, atol=1e-10)
    assert np.array_equal(m.fit_transform(X, Y), m.x_scores_)


def test_errors():
    X, Y = _blocks(1, K=5, p=3, q=3)
    with pytest.raises(ValueError, match="n_modes"):
        PLSModes(n_modes=4).fit(X, Y)
    with pytest.raises(ValueError, match="rows"):
        PLSModes().fit(X, Y[:4])
    with pytest.raises(UncorrelatedBlocksError, match="uncorrelated blocks"):
        PLSModes(n_modes=1).fit(X, np.ones_like(Y))
