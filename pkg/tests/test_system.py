import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opsys import (
    OperatorSystem,
    OrderUnitNet,
    band_system,
    cone_membership,
    decomposition_constant,
    diagzero_system,
    find_order_unit,
    full_system,
    is_generating,
    is_matrix_regular,
    is_weakly_norm_defining,
    make_system,
    max_rank_positive,
    norm_a,
    random_cone_element,
    random_element,
    regular_dominant,
)
from opsys.errors import BoundMismatch, LevelMismatch, NetNotIncreasing
from opsys.linalg import matrix_unit
from opsys.system import LevelElement, norm_a_sdp

seeds = st.integers(0, 2**32 - 1)


def E(k, i, j):
    return matrix_unit(k, i, j)


@pytest.fixture(scope="module")
def nonunital():
    return make_system([np.diag([1.0, 2.0, 3.0]), E(3, 0, 1) + E(3, 1, 0),
                        E(3, 1, 2) + E(3, 2, 1)], name="nonunital")


@pytest.fixture(scope="module")
def corner():
    # span{e11, e12} and adjoints: the cone lives on the first coordinate only
    return make_system([E(2, 0, 0), E(2, 0, 1)], name="corner")


def test_full_system_face():
    S = full_system(2)
    f = S.face()
    np.testing.assert_allclose(f.projection, np.eye(2), atol=1e-7)
    assert f.rank == 2
    assert is_generating(S).generating
    assert S.is_unital()
    np.testing.assert_allclose(find_order_unit(S).matrix, np.eye(2))


def test_diagzero_cone_is_trivial():
    S = diagzero_system(2)
    assert S.dim == 2
    assert S.face().rank == 0
    rep = is_generating(S)
    assert not rep.generating and rep.witness is not None
    assert find_order_unit(S) is None
    z = random_cone_element(S, np.random.default_rng(0), 2)
    assert not np.any(z.matrix)


def test_corner_system_support(corner):
    f = corner.face()
    np.testing.assert_allclose(f.projection, E(2, 0, 0), atol=1e-7)
    assert not is_generating(corner).generating
    assert find_order_unit(corner) is None


def test_nonunital_system_has_order_unit(nonunital):
    assert not nonunital.is_unital()
    assert is_generating(nonunital).generating
    u = find_order_unit(nonunital)
    assert u is not None
    assert np.linalg.eigvalsh(u.matrix)[0] > 1e-8
    assert np.linalg.eigvalsh(np.eye(3) - u.matrix)[0] > -1e-8


def test_max_rank_positive_band():
    S = band_system(3, 1)
    u, P = max_rank_positive(S)
    assert np.linalg.matrix_rank(u.matrix, tol=1e-7) == 3
    np.testing.assert_allclose(P, np.eye(3), atol=1e-7)


def test_face_is_computed_once_under_threads():
    S = band_system(3, 1)
    out = []
    threads = [threading.Thread(target=lambda: out.append(S.face())) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(f is out[0] for f in out)


@given(seeds, st.integers(1, 3))
def test_level_element_views_agree(seed, n):
    S = band_system(3, 1)
    x = random_element(S, np.random.default_rng(seed), n, selfadjoint=False)
    y = LevelElement.from_matrix(S, n, x.matrix)
    np.testing.assert_allclose(y.coeffs, x.coeffs, atol=1e-12)
    assert x.dilation().norm() == pytest.approx(x.norm(), rel=1e-12)
    assert x.embed(n + 1).norm() == pytest.approx(x.norm(), rel=1e-12)
    np.testing.assert_allclose(x.adjoint().matrix, x.matrix.conj().T, atol=1e-12)


def test_level_element_rejects_outside_matrix():
    S = band_system(3, 0)
    with pytest.raises(ValueError):
        S.element(np.ones((3, 3)), 1)
    with pytest.raises(LevelMismatch):
        LevelElement.from_matrix(S, 2, np.eye(3))


def test_cone_membership_and_certificate():
    S = full_system(2)
    assert cone_membership(S, S.element(np.eye(2))).in_cone
    x = S.element(np.diag([1.0, -2.0]))
    mem = cone_membership(S, x)
    assert not mem.in_cone
    assert mem.min_eigenvalue == pytest.approx(-2.0)
    assert np.trace(mem.certificate @ x.matrix).real < 0
    assert np.linalg.eigvalsh(mem.certificate)[0] >= -1e-14


@given(seeds, st.integers(1, 3))
def test_random_cone_elements_are_positive(seed, n):
    S = band_system(3, 1)
    x = random_cone_element(S, np.random.default_rng(seed), n)
    assert cone_membership(S, x).in_cone


def test_norm_a_example():
    S = full_system(3)
    net = OrderUnitNet([np.diag([1.0, 0.25, 1.0])])
    x = S.element(E(3, 0, 1))
    assert norm_a(S, net, x) == pytest.approx(2.0, abs=1e-8)


def test_norm_a_unit_net_is_operator_norm(rng):
    S = band_system(3, 1)
    net = OrderUnitNet([np.eye(3)])
    for n in (1, 2):
        x = random_element(S, rng, n, selfadjoint=False)
        assert norm_a(S, net, x) == pytest.approx(x.norm(), abs=1e-8)


def test_norm_a_singular_element_uses_bisection():
    S = full_system(2)
    net = OrderUnitNet([np.diag([1.0, 0.0])])
    assert norm_a(S, net, S.element(E(2, 0, 0))) == pytest.approx(1.0, abs=1e-8)
    assert norm_a(S, net, S.element(E(2, 1, 1))) == np.inf


def test_norm_a_sdp_agrees_with_closed_form(rng):
    a = np.diag([1.0, 0.5, 2.0])
    x = random_element(full_system(3), rng, 2).matrix
    w = np.kron(np.eye(2), np.diag(1 / np.sqrt([1.0, 0.5, 2.0])))
    assert norm_a_sdp(a, x, 2) == pytest.approx(np.linalg.norm(w @ x @ w, 2), abs=1e-8)


def test_net_must_increase():
    S = full_system(2)
    with pytest.raises(NetNotIncreasing):
        OrderUnitNet([np.eye(2), 0.5 * np.eye(2)]).validate(S)
    with pytest.raises(NetNotIncreasing):
        OrderUnitNet([np.diag([1.0, -1.0])]).validate(S)


def test_bound_mismatch_is_an_error_type():
    err = BoundMismatch("x", upper=2.0, lower=1.0)
    assert err.upper == 2.0 and err.lower == 1.0


def test_weakly_norm_defining(rng):
    S = band_system(3, 1)
    net = OrderUnitNet([0.5 * np.eye(3), np.eye(3)])
    samples = [random_element(S, rng, 2) for _ in range(3)]
    assert is_weakly_norm_defining(S, net, samples)["verdict"]
    rep = is_weakly_norm_defining(diagzero_system(2), OrderUnitNet([np.zeros((2, 2))]), [])
    assert not rep["verdict"] and rep["reason"] == "no-net"


def test_matrix_regularity_on_full(rng):
    S = full_system(2)
    samples = []
    for _ in range(3):
        x = random_element(S, rng, 2)
        samples.append(x * (0.9 / x.norm()))
    rep = is_matrix_regular(S, 2, samples)
    assert rep["verdict"]
    val, u = regular_dominant(S, samples[0])
    assert val == pytest.approx(0.9, abs=1e-6)


def test_decomposition_constants():
    S = full_system(2)
    x = S.element(np.diag([1.0, -1.0]))
    assert decomposition_constant(S, x) == pytest.approx(1.0, abs=1e-6)
    U = diagzero_system(2)
    assert decomposition_constant(U, U.element(E(2, 0, 1) + E(2, 1, 0))) == np.inf


def test_system_json_roundtrip_keeps_basis():
    S = band_system(3, 1)
    T = OperatorSystem.from_json(S.to_json())
    assert np.array_equal(S.basis, T.basis)
    assert T.name == S.name
