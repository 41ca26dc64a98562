"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy`` complex arrays. The helpers here add the checks and
conventions the package relies on: Hermitian eigendecomposition with input
validation, Hilbert-Schmidt subspaces with orthonormal bases, and a JSON
encoding for complex matrices.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, EmptySpan, NonHermitianInput
from .kernels import mgs

ABS_FLOOR = 1e-12


def as_cmatrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    return a


def adjoint(a):
    return np.conj(np.swapaxes(a, -1, -2))


def herm_part(a):
    return 0.5 * (a + adjoint(a))


def hermitian_defect(a):
    """Frobenius norm of ``a - a*``."""
    return float(np.linalg.norm(a - adjoint(a)))


def hermitian_eig(a, rel_tol=1e-8):
    """Eigendecomposition of a Hermitian matrix with ascending eigenvalues.

    The input is symmetrized before decomposition. Raises ``NonHermitianInput``
    when ``||a - a*|| > rel_tol * ||a||`` (with an absolute floor).
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise NonHermitianInput(f"matrix is not square: {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConvergenceFailure("matrix contains non-finite entries")
    scale = max(float(np.linalg.norm(a)), ABS_FLOOR)
    if hermitian_defect(a) > rel_tol * scale:
        raise NonHermitianInput(
            f"||A - A*|| = {hermitian_defect(a):.3e} exceeds {rel_tol:.0e}*||A||")
    try:
        w, v = np.linalg.eigh(herm_part(a))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return w, v


def eigvalsh(a):
    """Ascending eigenvalues of the Hermitian part of ``a`` (no validation)."""
    try:
        return np.linalg.eigvalsh(herm_part(a))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def min_eig(a):
    return float(eigvalsh(a)[0])


def kron(a, b):
    """Kronecker product, ``kron(a, b)[(i,p),(j,q)] = a[i,j] * b[p,q]``."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def op_norm(a):
    """Largest singular value."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(a, 2))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def trace_norm(a):
    """Sum of singular values."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(a, "nuc"))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def psd_sqrt(a):
    w, v = np.linalg.eigh(herm_part(a))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ adjoint(v)


def psd_inv_sqrt(a):
    w, v = np.linalg.eigh(herm_part(a))
    if w[0] <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return (v / np.sqrt(w)) @ adjoint(v)


def matrix_unit(n, i, j):
    e = np.zeros((n, n), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def hermitian_basis(n):
    """Hermitian basis of ``M_n``, orthonormal for ``<A,B> = Tr(B* A)``.

    Ordered as diagonal units, then ``(E_pq + E_qp)/sqrt2`` and
    ``i(E_pq - E_qp)/sqrt2`` for ``p < q``.
    """
    out = []
    for p in range(n):
        out.append(matrix_unit(n, p, p))
    r = 1.0 / np.sqrt(2.0)
    for p in range(n):
        for q in range(p + 1, n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[p, q] = e[q, p] = r
            out.append(e)
            f = np.zeros((n, n), dtype=np.complex128)
            f[p, q] = 1j * r
            f[q, p] = -1j * r
            out.append(f)
    return np.array(out).reshape(n * n, n, n)


def hvec(a):
    """Real vector of a complex array whose dot products give ``Re Tr(B* A)``."""
    a = np.asarray(a)
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


@dataclass(frozen=True, eq=False)
class HSSubspace:
    """Subspace of ``M_k`` with a Hilbert-Schmidt orthonormal basis.

    When ``selfadjoint`` is set, every basis element is Hermitian, so the same
    basis is simultaneously a complex basis of the subspace and a real basis of
    its Hermitian part.
    """

    basis: np.ndarray
    selfadjoint: bool

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def ambient_dim(self):
        return self.basis.shape[1]

    def coords(self, x):
        """Coefficients ``Tr(b_j* x)`` of the orthogonal projection of ``x``."""
        x = np.asarray(x, dtype=np.complex128)
        return np.conj(self.basis).reshape(self.dim, -1) @ x.reshape(-1)

    def from_coords(self, c):
        return np.tensordot(np.asarray(c, dtype=np.complex128), self.basis, axes=1)

    def project(self, x):
        return self.from_coords(self.coords(x))

    def residual(self, x):
        return float(np.linalg.norm(np.asarray(x) - self.project(x)))

    def contains(self, x, tol=1e-10):
        scale = max(1.0, float(np.linalg.norm(x)))
        return self.residual(x) <= tol * scale

    def gram(self):
        flat = self.basis.reshape(self.dim, -1)
        return np.conj(flat) @ flat.T


def subspace_from_spanning(mats, selfadjointize=True, rel_tol=1e-10):
    """Orthonormal Hilbert-Schmidt basis for the span of ``mats``.

    With ``selfadjointize`` the adjoints are added to the span and the returned
    basis consists of Hermitian matrices.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("expected a list of square matrices of one size")
    k = mats.shape[1]
    if not np.any(mats):
        raise EmptySpan("all spanning matrices are zero")
    if selfadjointize:
        re = herm_part(mats)
        im = (mats - adjoint(mats)) / 2j
        gens = np.concatenate([re, im])
        # Hermitian matrices: the real inner product of (Re, Im) parts is Tr(B A)
        flat = np.concatenate([gens.real.reshape(len(gens), -1),
                               gens.imag.reshape(len(gens), -1)], axis=1)
        q = mgs(flat, rel_tol)
        if q.shape[0] == 0:
            raise EmptySpan("spanning set has zero span")
        half = k * k
        basis = (q[:, :half] + 1j * q[:, half:]).reshape(-1, k, k)
        basis = herm_part(basis)
        return HSSubspace(basis=basis, selfadjoint=True)
    q = mgs(mats.reshape(len(mats), -1), rel_tol)
    if q.shape[0] == 0:
        raise EmptySpan("spanning set has zero span")
    basis = q.reshape(-1, k, k)
    sub = HSSubspace(basis=basis, selfadjoint=False)
    closed = all(sub.contains(adjoint(b), 1e-10) for b in basis)
    return HSSubspace(basis=basis, selfadjoint=closed)


def random_hermitian(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * herm_part(g) / np.sqrt(2.0)


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, (n, n)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def matrix_to_json(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def matrix_from_json(obj):
    rows, cols = int(obj["rows"]), int(obj["cols"])
    entries = obj["entries"]
    if len(entries) != rows * cols:
        raise ValueError(f"entries length {len(entries)} != rows*cols = {rows * cols}")
    data = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return data.reshape(rows, cols)
