"""Hot loops: Schur-complement assembly for the interior-point solver and
Gram-Schmidt orthonormalization.

Each kernel has a numba version and a numpy version with identical semantics.
``schur_block`` dispatches between them according to ``NUMBA_ENABLED`` and the
sparsity of the constraint matrices.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit


SPARSE_SPEED_RATIO = 35.0


class SparseBlock:
    """Coordinate-list view of the constraint matrices of one PSD block.

    Entries of constraint ``i`` live in ``ptr[i]:ptr[i+1]`` of ``rows``, ``cols``
    and ``vals``.
    """

    __slots__ = ("ptr", "rows", "cols", "vals", "density", "prefer_sparse")

    def __init__(self, mats):
        m, d, _ = mats.shape
        nz = np.abs(mats) > 0.0
        counts = nz.reshape(m, -1).sum(axis=1)
        self.ptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(counts, out=self.ptr[1:])
        idx_i, idx_r, idx_c = np.nonzero(nz)
        self.rows = idx_r.astype(np.int64)
        self.cols = idx_c.astype(np.int64)
        self.vals = mats[idx_i, idx_r, idx_c].astype(np.complex128)
        self.density = float(counts.sum()) / max(1, m * d * d)
        # operation counts of the two assembly paths; the compiled loops run at
        # roughly 1/35 of the BLAS throughput (measured by benchmarks/bench_kernels.py)
        nnz = float(counts.sum()) / max(1, m)
        sparse_ops = m * nnz * d + 0.5 * m * m * nnz
        dense_ops = 2.0 * m * d ** 3 + m * m * d * d
        self.prefer_sparse = SPARSE_SPEED_RATIO * sparse_ops < dense_ops


@njit
def _schur_sparse_kernel(ptr, rows, cols, vals, X, Sinv, M):
    m = ptr.shape[0] - 1
    d = X.shape[0]
    G = np.empty((d, d), dtype=np.complex128)
    for i in range(m):
        # G = Sinv @ A_i @ X, accumulated as a sum of rank-one terms
        for s in range(d):
            for r in range(d):
                G[s, r] = 0.0
        for e in range(ptr[i], ptr[i + 1]):
            p = rows[e]
            q = cols[e]
            a = vals[e]
            for s in range(d):
                sa = Sinv[s, p] * a
                if sa != 0.0:
                    for r in range(d):
                        G[s, r] += sa * X[q, r]
        for j in range(i, m):
            acc = 0.0
            for f in range(ptr[j], ptr[j + 1]):
                acc += (vals[f] * G[cols[f], rows[f]]).real
            M[i, j] += acc
            if j != i:
                M[j, i] += acc


def schur_sparse(block, X, Sinv, M):
    """Add ``Re Tr(A_i X A_j Sinv)`` for one block into ``M`` (numba path)."""
    _schur_sparse_kernel(block.ptr, block.rows, block.cols, block.vals,
                         np.ascontiguousarray(X), np.ascontiguousarray(Sinv), M)


def schur_dense(mats, X, Sinv, M):
    """Add ``Re Tr(A_i X A_j Sinv)`` for one block into ``M`` using batched BLAS."""
    m = mats.shape[0]
    G = Sinv @ mats @ X
    M += (mats.reshape(m, -1) @ G.transpose(0, 2, 1).reshape(m, -1).T).real


def schur_block(mats, sparse, X, Sinv, M):
    if NUMBA_ENABLED and sparse is not None and sparse.prefer_sparse:
        schur_sparse(sparse, X, Sinv, M)
    else:
        schur_dense(mats, X, Sinv, M)


@njit
def _mgs_kernel(V, tol):
    n, d = V.shape
    Q = np.zeros((n, d), dtype=V.dtype)
    rank = 0
    for idx in range(n):
        v = V[idx].copy()
        for _ in range(2):
            for j in range(rank):
                c = 0.0 * v[0]
                for t in range(d):
                    c += np.conj(Q[j, t]) * v[t]
                for t in range(d):
                    v[t] -= c * Q[j, t]
        nv = 0.0
        for t in range(d):
            nv += abs(v[t]) ** 2
        nv = np.sqrt(nv)
        if nv > tol:
            for t in range(d):
                Q[rank, t] = v[t] / nv
            rank += 1
    return Q[:rank].copy()


def _mgs_numpy(V, tol):
    basis = []
    for v in V:
        w = v.copy()
        for _ in range(2):
            for q in basis:
                w = w - np.vdot(q, w) * q
        nw = np.linalg.norm(w)
        if nw > tol:
            basis.append(w / nw)
    if not basis:
        return np.zeros((0, V.shape[1]), dtype=V.dtype)
    return np.array(basis)


def mgs(V, rel_tol=1e-10, scale=None):
    """Orthonormalize the rows of ``V`` by modified Gram-Schmidt with one
    re-orthogonalization pass.

    A row is kept when its residual norm exceeds ``rel_tol`` times ``scale``
    (default: the largest input row norm). Works for real and complex input.
    """
    V = np.ascontiguousarray(V)
    if V.shape[0] == 0:
        return V.copy()
    if scale is None:
        scale = float(np.max(np.linalg.norm(V, axis=1)))
    if scale == 0.0:
        return np.zeros((0, V.shape[1]), dtype=V.dtype)
    tol = rel_tol * scale
    if NUMBA_ENABLED:
        return _mgs_kernel(V, tol)
    return _mgs_numpy(V, tol)
