import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opsys.errors import ConvergenceFailure, EmptySpan, NonHermitianInput
from opsys.linalg import (
    hermitian_basis,
    hermitian_eig,
    kron,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    psd_sqrt,
    random_hermitian,
    random_unitary,
    subspace_from_spanning,
    trace_norm,
)

seeds = st.integers(0, 2**32 - 1)


def test_eig_of_diagonal_matrix():
    w, v = hermitian_eig(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_allclose(w, [-1.0, 2.0, 3.0])
    np.testing.assert_allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]], atol=1e-14)


def test_eig_of_pauli_y():
    w, _ = hermitian_eig(np.array([[0, -1j], [1j, 0]]))
    np.testing.assert_allclose(w, [-1.0, 1.0], atol=1e-14)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_rejects_non_finite():
    with pytest.raises(ConvergenceFailure):
        hermitian_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


@given(seeds, st.integers(1, 8))
def test_eig_reconstructs(seed, n):
    a = random_hermitian(np.random.default_rng(seed), n)
    w, v = hermitian_eig(a)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-12 * max(1, op_norm(a)))


def test_hermitian_basis_is_orthonormal_and_hermitian():
    for n in (1, 2, 4):
        B = hermitian_basis(n)
        assert B.shape == (n * n, n, n)
        np.testing.assert_allclose(B, B.conj().transpose(0, 2, 1))
        flat = B.reshape(n * n, -1)
        np.testing.assert_allclose(flat.conj() @ flat.T, np.eye(n * n), atol=1e-15)


def test_norm_oracles():
    a = np.diag([3.0, -4.0])
    assert op_norm(a) == pytest.approx(4.0)
    assert trace_norm(a) == pytest.approx(7.0)
    assert op_norm(np.zeros((0, 0))) == 0.0


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_kron_norms_multiply(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, n), random_hermitian(rng, m)
    assert op_norm(kron(a, b)) == pytest.approx(op_norm(a) * op_norm(b), rel=1e-10)
    assert trace_norm(kron(a, b)) == pytest.approx(trace_norm(a) * trace_norm(b), rel=1e-10)


def test_unitary_invariance(rng):
    a = random_hermitian(rng, 5)
    u = random_unitary(rng, 5)
    assert op_norm(u @ a @ u.conj().T) == pytest.approx(op_norm(a), rel=1e-12)


def test_psd_sqrt_squares_back(rng):
    g = random_hermitian(rng, 4)
    p = g @ g
    r = psd_sqrt(p)
    np.testing.assert_allclose(r @ r, p, atol=1e-12)


def test_subspace_of_diagonals():
    mats = [np.diag([1.0, 0.0]), np.diag([1.0, 1.0]), np.diag([2.0, 1.0])]
    sp = subspace_from_spanning(mats)
    assert sp.dim == 2
    assert sp.contains(np.diag([5.0, -3.0]))
    assert not sp.contains(np.array([[0, 1], [1, 0.0]]))
    np.testing.assert_allclose(sp.gram(), np.eye(2), atol=1e-14)


def test_subspace_adds_adjoints():
    e12 = np.array([[0, 1], [0, 0.0]])
    sp = subspace_from_spanning([e12])
    assert sp.dim == 2
    assert sp.contains(e12.T)
    for b in sp.basis:
        np.testing.assert_allclose(b, b.conj().T)


def test_empty_span():
    with pytest.raises(EmptySpan):
        subspace_from_spanning([np.zeros((2, 2))])


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_matrix_json_roundtrip_is_exact(seed, r, c):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))
    b = matrix_from_json(matrix_to_json(a))
    assert np.array_equal(a, b)


def test_matrix_json_length_check():
    with pytest.raises(ValueError):
        matrix_from_json({"rows": 2, "cols": 2, "entries": [[1, 0]]})
