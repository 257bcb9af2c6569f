"""Small shared helpers: seed derivation, sign conventions, validation."""

import hashlib

import numpy as np


def derive_seed(*parts):
    """Derive a 64-bit seed from arbitrary labels.

    The labels are joined with ``"|"`` and hashed with SHA-256; the first eight
    bytes (big-endian) form the seed. This makes per-subject streams independent
    of evaluation order.
    """
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def fix_signs(vectors, axis=0):
    """Flip each vector so its largest-magnitude entry is positive.

    ``vectors`` holds one vector per column (``axis=0``) or per row
    (``axis=1``). Ties in magnitude resolve to the lowest index.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if axis == 1:
        return fix_signs(vectors.T, axis=0).T
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def as_float_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X
