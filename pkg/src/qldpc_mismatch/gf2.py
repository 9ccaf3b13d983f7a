"""Dense GF(2) linear algebra on uint8 matrices."""

from __future__ import annotations

import numpy as np


def rref(M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2).

    Returns the nonzero rows of the reduced matrix and their pivot columns.
    """
    A = np.array(M, dtype=np.uint8) & 1
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(A[r:, c])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        A[others] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rank_gf2(M) -> int:
    return len(rref(M)[1])


def in_rowspan(basis: np.ndarray, pivots: list[int], vectors) -> np.ndarray:
    """Membership test against an RREF basis, vectorized over rows of ``vectors``.

    With a reduced basis, the only candidate combination is the one selecting
    row k exactly when the vector has a 1 in pivot column k.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=np.uint8))
    if basis.shape[0] == 0:
        return ~V.any(axis=1)
    coeff = V[:, pivots].astype(np.float32)
    recon = (coeff @ basis.astype(np.float32)).astype(np.int64) & 1
    return np.all(recon == V, axis=1)

