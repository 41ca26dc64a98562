import numpy as np
import pytest

from opsys import (
    LevelFunctional,
    SystemMap,
    band_system,
    cb_norm,
    compression,
    diagzero_system,
    double_dual_compare,
    dual_norm,
    dual_system,
    faithfulness_witness,
    full_system,
    functor_dual_map,
    functor_laws,
    iota_compare,
    make_system,
    positive_state,
    random_cp_map,
    random_functional,
    schur_multiplier,
    verify_theorem_suite,
)
from opsys.duality import dual_of
from opsys.errors import DomainMismatch, NotCCP, NotGenerating
from opsys.linalg import matrix_unit


def correlation(rng, k):
    g = rng.standard_normal((k, k))
    c = g @ g.T
    d = 1.0 / np.sqrt(np.diag(c))
    return d[:, None] * c * d[None, :]


def test_dual_system_of_full_is_clean():
    D = dual_system(full_system(2))
    assert D.generating and not D.degenerate
    assert D.dim == 4
    assert all(c["verdict"] for c in D.checks)
    assert D.to_json()["kernel_dim"] == 0


@pytest.mark.parametrize("k", [2, 3])
def test_diagzero_dual_norm_vanishes(k, rng):
    S = diagzero_system(k)
    D = dual_system(S)
    assert D.degenerate and not D.generating
    for _ in range(5):
        f = random_functional(S, rng, int(rng.integers(1, 3)))
        assert dual_norm(D, f) <= 1e-8
        rep = iota_compare(D, f)
        assert "NotDualizable" in rep.flags


def test_dual_norm_bounded_by_cb(rng):
    S = band_system(3, 1)
    D = dual_system(S, verify=False)
    for n in (1, 2):
        rep = iota_compare(D, random_functional(S, rng, n))
        assert rep.contraction_ok
        assert 1.0 - 1e-6 <= rep.ratio <= 4.0 + 1e-4


def test_positive_functionals_are_isometric(rng):
    S = full_system(2)
    D = dual_system(S, verify=False)
    for n in (1, 2):
        rep = iota_compare(D, positive_state(S, rng, n), positive=True)
        assert rep.positive
        assert rep.ratio == pytest.approx(1.0, abs=1e-5)


def test_dual_norm_accepts_plain_system_and_maps(rng):
    S = full_system(2)
    phi = random_cp_map(S, rng, 1)
    assert dual_norm(S, phi) == pytest.approx(dual_norm(dual_system(S), phi), abs=1e-9)
    with pytest.raises(DomainMismatch):
        dual_norm(S, LevelFunctional(full_system(3), np.zeros((1, 1, 9))))
    with pytest.raises(TypeError):
        dual_norm(S, np.zeros(3))


def test_functor_dual_map_of_compression(rng):
    S = band_system(3, 1)
    V = np.zeros((3, 2))
    V[0, 0] = V[1, 1] = 1.0
    phi = compression(S, V, full_system(2))
    pd, report = functor_dual_map(phi, samples=1, levels=(1,), rng=rng)
    assert all(c["verdict"] for c in report["checks"])
    g = positive_state(full_system(2), rng)
    # (phi^d g)(x) = g(phi(x)) on coordinates
    h = pd(g)
    x = S.basis[1]
    lhs = np.sum(h.values[0, 0] * np.einsum("jlk,kl->j", S.basis, x))
    y = (V.T @ x @ V)
    T = full_system(2)
    rhs = np.sum(g.values[0, 0] * np.einsum("jlk,kl->j", T.basis, y))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_functor_rejects_non_ccp(rng):
    S = full_system(2)
    with pytest.raises(NotCCP):
        functor_dual_map(schur_multiplier(S, 2 * correlation(rng, 2)))
    with pytest.raises(NotCCP):
        functor_dual_map(SystemMap.from_function(S, lambda b: b.T))


def test_dual_of_rejects_map_leaving_codomain():
    S = full_system(2)
    T = band_system(2, 0)
    with pytest.raises(DomainMismatch):
        dual_of(SystemMap(S, S.basis.copy(), T))


def test_functor_laws_and_faithfulness(rng):
    S = band_system(3, 1)
    phi = schur_multiplier(S, correlation(rng, 3), S)
    psi = compression(S, np.eye(3)[:, :2], full_system(2))
    checks = functor_laws(phi, psi)
    assert all(c["verdict"] for c in checks)
    other = compression(S, np.eye(3)[:, 1:], full_system(2))
    wit = faithfulness_witness(psi, other, rng)
    assert wit is not None and wit[1] > 1e-9
    assert faithfulness_witness(psi, psi, rng) is None


def test_double_dual_on_full(rng):
    out = double_dual_compare(full_system(2), levels=(1, 2), samples=2, rng=rng)
    assert out["unital"]
    for level in out["levels"]:
        assert all(c["verdict"] for c in level["checks"])
    assert out["dual_cone_generating"]["verdict"]


def test_double_dual_needs_generating():
    with pytest.raises(NotGenerating):
        double_dual_compare(diagzero_system(2))


def test_theorem_suite_on_both_sides(rng):
    good = verify_theorem_suite(band_system(3, 1), levels=(1,), samples=2, rng=rng)
    assert all(c["verdict"] for c in good["checks"])
    assert any(c["check"] == "sandwich" for c in good["checks"])
    bad = verify_theorem_suite(diagzero_system(2), levels=(1,), samples=2, rng=rng)
    assert all(c["verdict"] for c in bad["checks"])
    assert not any(c["check"] == "sandwich" for c in bad["checks"])


def test_nonunital_dual_norm_still_contractive():
    # order unit diag(1, 2) but no identity
    E = lambda i, j: matrix_unit(2, i, j)  # noqa: E731
    S = make_system([np.diag([1.0, 2.0]), E(0, 1) + E(1, 0), 1j * (E(0, 1) - E(1, 0))])
    assert not S.is_unital()
    f = LevelFunctional(S, np.array([[[1.0, 0.0, 0.0]]], dtype=complex))
    cb = cb_norm(f).value
    assert dual_norm(S, f) <= cb + 1e-8
