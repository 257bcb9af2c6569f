"""Independent reference implementations used only by the tests."""

import numpy as np


def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi rotations; returns eigenvalues descending and eigenvectors."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off < tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q] = s
                R[q, p] = -s
                A = R.T @ A @ R
                V = V @ R
    w = np.diag(A)
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def knn_sigma_bruteforce(X, k):
    X = np.asarray(X, dtype=float)
    K = len(X)
    total = 0.0
    for i in range(K):
        d = sorted(float(np.sqrt(np.sum((X[i] - X[j]) ** 2))) for j in range(K) if j != i)
        total += d[k - 1]
    return total / K


def energy_bruteforce(Z, W_list, Mcorr, mu):
    """Double sums of the alignment objective written out literally."""
    M = len(Z)
    E = 0.0
    for m in range(M):
        K = len(Z[m])
        for i in range(K):
            for j in range(K):
                E += np.sum((Z[m][i] - Z[m][j]) ** 2) * W_list[m][i, j]
        for n in range(M):
            if n == m:
                continue
            for i in range(K):
                for j in range(K):
                    E += mu * np.sum((Z[m][i] - Z[n][j]) ** 2) * Mcorr[(m, n)][i, j]
    return E
