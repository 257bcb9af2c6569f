import numpy as np
import pytest

from conftest import two_view_dataset
from latentuq.affinity import build_affinity_graph
from latentuq.alignment import (
    DisconnectedGraphError,
    ManifoldAlignment,
    alignment_energy,
    assemble_block,
    block_from_matrix,
    laplacian_eigenmaps,
    spectral_embed,
)
from oracles import energy_bruteforce, jacobi_eigh


def test_single_descriptor_block_is_affinity(rng):
    X = rng.normal(size=(10, 3))
    g = build_affinity_graph([X], 3, 3)
    assert np.array_equal(assemble_block(g).blocks, g.W[0])


def test_hand_assembled_block():
    W = np.array([[1.0, 0.5], [0.5, 1.0]])

    class G:
        n_descriptors, n_samples, mu = 2, 2, 1.0

    G.W = [W, W]
    G.Mcorr = {(0, 1): np.eye(2), (1, 0): np.eye(2)}
    B = assemble_block(G).blocks
    expected = np.array([[1, 0.5, 1, 0], [0.5, 1, 0, 1], [1, 0, 1, 0.5], [0, 1, 0.5, 1]])
    assert np.array_equal(B, expected)


def test_zero_coupling_disconnects():
    X1, X2 = two_view_dataset(K=20)
    with pytest.raises(DisconnectedGraphError, match="component"):
        ManifoldAlignment(mu=0.0, k_sigma=4, k_M=4).fit([X1, X2])


def test_zero_degree_row():
    B = np.eye(3)
    B[1, 1] = 0.0
    with pytest.raises(DisconnectedGraphError, match="zero degree"):
        block_from_matrix(B)


def test_trivial_pair_and_constraint():
    X1, X2 = two_view_dataset(K=25)
    model = ManifoldAlignment(mu=1.0, k_sigma=5, k_M=5, n_components=3).fit([X1, X2])
    B = model.block_.blocks
    D = B.sum(axis=1)
    P = B / np.sqrt(np.outer(D, D))
    v = np.sqrt(D)
    assert np.allclose(P @ v, v, atol=1e-12)
    Z = model.embedding_.stacked
    assert np.allclose(Z.T @ (D[:, None] * Z), np.eye(3), atol=1e-10)
    assert model.eigenvalues_[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(model.eigenvalues_) <= 1e-15)
    assert np.all(np.abs(model.eigenvalues_) <= 1 + 1e-12)


def test_three_by_three_matches_bruteforce():
    W = np.array([[1.0, 0.6, 0.2], [0.6, 1.0, 0.3], [0.2, 0.3, 1.0]])
    emb = spectral_embed(block_from_matrix(W), d=2)
    D = W.sum(axis=1)
    w_ref, F = jacobi_eigh(W / np.sqrt(np.outer(D, D)))
    assert np.allclose(emb.eigenvalues, w_ref, atol=1e-12)
    Z_ref = F[:, 1:] / np.sqrt(D)[:, None]
    for k in range(2):
        z = emb.Z[0][:, k]
        assert min(np.abs(z - Z_ref[:, k]).max(), np.abs(z + Z_ref[:, k]).max()) < 1e-12


def test_d_too_large():
    W = np.array([[1.0, 0.5], [0.5, 1.0]])
    with pytest.raises(ValueError, match="d must satisfy"):
        spectral_embed(block_from_matrix(W), d=2)


def test_energy_hand_values():
    w = 0.3

    class G:
        n_descriptors, n_samples, mu = 1, 2, 1.0

    G.W = [np.array([[1.0, w], [w, 1.0]])]
    G.Mcorr = {}
    assert alignment_energy([np.array([[0.0], [1.0]])], G) == pytest.approx(2 * w, abs=1e-15)
    assert alignment_energy([np.ones((2, 1))], G) == 0.0


def test_energy_matches_double_sum_and_trace():
    X1, X2 = two_view_dataset(K=12)
    model = ManifoldAlignment(mu=0.7, k_sigma=3, k_M=3).fit([X1, X2])
    g = model.graph_
    E = model.energy()
    assert E == pytest.approx(energy_bruteforce(model.embedding_.Z, g.W, g.Mcorr, g.mu), rel=1e-12)
    B = model.block_.blocks
    L = np.diag(B.sum(axis=1)) - B
    Z = model.embedding_.stacked
    assert E == pytest.approx(2 * np.trace(Z.T @ L @ Z), rel=1e-10)


def test_determinism_and_sign_convention():
    X1, X2 = two_view_dataset(K=20, seed=5)
    a = ManifoldAlignment(k_sigma=4, k_M=4).fit_transform([X1, X2])
    b = ManifoldAlignment(k_sigma=4, k_M=4).fit_transform([X1, X2])
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    stacked = np.vstack(a)
    idx = np.argmax(np.abs(stacked), axis=0)
    assert np.all(stacked[idx, np.arange(stacked.shape[1])] > 0)


def test_mu_monotone_trend():
    X1, X2 = two_view_dataset(K=40, seed=2, noise=0.2)
    gaps = []
    for mu in (0.1, 1.0, 10.0):
        Z1, Z2 = ManifoldAlignment(mu=mu, k_sigma=5, k_M=5).fit_transform([X1, X2])
        scale = np.sqrt(np.sum(np.vstack([Z1, Z2]).var(axis=0)))
        gaps.append(np.mean(np.linalg.norm(Z1 - Z2, axis=1)) / scale)
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_sklearn_params_roundtrip():
    m = ManifoldAlignment(mu=2.0, n_components=3)
    assert m.get_params()["mu"] == 2.0
    assert m.set_params(k_M=7).k_M == 7


def test_laplacian_eigenmaps_equals_single_alignment(rng):
    X = rng.normal(size=(18, 4))
    model = ManifoldAlignment(k_sigma=4, k_M=4, n_components=3).fit([X])
    assert np.array_equal(model.embedding_.Z[0], laplacian_eigenmaps(model.graph_.W[0], 3))
