import numpy as np
import pytest
from _oracles import grid_oracle, lambda_max_problem, tiny_sdp
from hypothesis import given
from hypothesis import strategies as st

from opsys.linalg import random_hermitian
from opsys.sdp import SdpBuilder, SdpProblem, SdpSolution, Status, check_certificate, solve

seeds = st.integers(0, 2**32 - 1)


def test_lambda_max_of_diagonal():
    sol = solve(lambda_max_problem(np.diag([1.0, 2.0, 3.0])))
    assert sol.status is Status.OPTIMAL
    assert sol.primal_objective == pytest.approx(3.0, abs=1e-8)
    assert check_certificate(lambda_max_problem(np.diag([1.0, 2.0, 3.0])), sol)["ok"]


def test_zero_matrix():
    sol = solve(lambda_max_problem(np.zeros((3, 3))))
    assert sol.optimal
    assert abs(sol.primal_objective) <= 1e-8


@given(seeds, st.integers(1, 12))
def test_lambda_max_matches_eigenvalues(seed, n):
    A = random_hermitian(np.random.default_rng(seed), n)
    p = lambda_max_problem(A)
    sol = solve(p)
    assert sol.optimal
    assert sol.primal_objective == pytest.approx(np.linalg.eigvalsh(A)[-1], abs=1e-8)
    assert check_certificate(p, sol)["ok"]


def test_infeasible_problem_has_farkas_certificate():
    # diag(y, -y - 1) >= 0 has no solution
    blk = np.array([np.diag([0.0, -1.0]), np.diag([1.0, -1.0])], dtype=complex)
    p = SdpProblem(c=[0.0], blocks=[blk])
    sol = solve(p)
    assert sol.status is Status.PRIMAL_INFEASIBLE
    cert = check_certificate(p, sol)
    assert cert["ok"]
    assert any(c["name"] == "farkas_value" for c in cert["checks"])


def test_unbounded_problem_has_ray():
    # min -y subject to y >= 0
    p = SdpProblem(c=[-1.0], blocks=[np.array([[[0.0]], [[1.0]]], dtype=complex)])
    sol = solve(p)
    assert sol.status is Status.DUAL_INFEASIBLE
    assert check_certificate(p, sol)["ok"]


def test_equality_constraint():
    # min y1 subject to [[y1, y2], [y2, 1]] >= 0 and y2 = 1: optimum y1 = 1
    sb = SdpBuilder()
    y = sb.variables(2)
    blk = sb.block(2)
    blk.add_const(np.diag([0.0, 1.0]))
    blk.add(y, [np.diag([1.0, 0.0]), np.array([[0, 1], [1, 0.0]])])
    sb.equality(y, [0.0, 1.0], 1.0)
    sb.minimize(y, [1.0, 0.0])
    p = sb.build()
    sol = solve(p)
    assert sol.optimal
    np.testing.assert_allclose(sol.y, [1.0, 1.0], atol=1e-6)
    assert check_certificate(p, sol)["ok"]


def test_inconsistent_equalities():
    p = SdpProblem(c=[1.0], blocks=[np.array([[[1.0]], [[1.0]]], dtype=complex)],
                   eq_a=[[1.0], [1.0]], eq_b=[0.0, 1.0])
    assert solve(p).status is Status.PRIMAL_INFEASIBLE


def test_builder_mirrors_off_diagonal_blocks():
    sb = SdpBuilder()
    y = sb.variables(1)
    blk = sb.block(4)
    blk.add_const(np.eye(4))
    blk.add(y, [np.array([[0, 1j], [0, 0]])], 0, 2)
    p = sb.build()
    F1 = p.blocks[0][1]
    np.testing.assert_allclose(F1, F1.conj().T)
    assert F1[0, 3] == 1j and F1[3, 0] == -1j


@given(seeds)
def test_grid_oracle_agreement(seed):
    p = tiny_sdp(np.random.default_rng(seed))
    sol = solve(p)
    assert sol.optimal
    ref, _ = grid_oracle(p)
    assert sol.primal_objective == pytest.approx(ref, abs=1e-4)
    assert check_certificate(p, sol)["ok"]


@pytest.mark.parametrize("field", ["y", "gap"])
def test_certificate_detects_corruption(field, rng):
    A = random_hermitian(rng, 5)
    p = lambda_max_problem(A)
    sol = solve(p)
    if field == "y":
        bad = SdpSolution(sol.status, sol.y - 0.1, sol.primal_objective - 0.1,
                          sol.dual_objective, sol.dual_matrices, sol.gap)
        name = "slack_psd[0]"
    else:
        bad = SdpSolution(sol.status, sol.y, sol.primal_objective, sol.dual_objective - 1.0,
                          sol.dual_matrices, 1.0)
        name = "gap"
    cert = check_certificate(p, bad)
    assert not cert["ok"]
    assert not next(c for c in cert["checks"] if c["name"] == name)["verdict"]


def test_certificate_detects_non_psd_dual(rng):
    p = lambda_max_problem(random_hermitian(rng, 4))
    sol = solve(p)
    Z = [-z for z in sol.dual_matrices]
    bad = SdpSolution(sol.status, sol.y, sol.primal_objective, sol.dual_objective, Z, sol.gap)
    assert not check_certificate(p, bad)["ok"]


@given(seeds, st.floats(0.01, 100.0))
def test_objective_scaling(seed, alpha):
    p = tiny_sdp(np.random.default_rng(seed))
    base = solve(p)
    scaled = solve(SdpProblem(c=alpha * p.c, blocks=p.blocks))
    assert scaled.primal_objective == pytest.approx(alpha * base.primal_objective,
                                                    abs=1e-6 * max(1.0, alpha))


@given(seeds, st.floats(0.01, 100.0))
def test_constraint_scaling(seed, beta):
    p = tiny_sdp(np.random.default_rng(seed))
    base = solve(p)
    scaled = solve(SdpProblem(c=p.c, blocks=[beta * b for b in p.blocks]))
    assert scaled.primal_objective == pytest.approx(base.primal_objective, abs=1e-6)


def test_deterministic(rng):
    p = tiny_sdp(rng, m=2, d=3)
    a, b = solve(p), solve(p)
    assert np.array_equal(a.y, b.y)
    assert a.iterations == b.iterations


def test_problem_json_roundtrip(rng):
    p = tiny_sdp(rng, m=2, d=3)
    q = SdpProblem.from_json(p.to_json())
    assert np.array_equal(p.c, q.c)
    for a, b in zip(p.blocks, q.blocks):
        assert np.array_equal(a, b)
    sol = solve(q)
    assert sol.to_json()["status"] == "Optimal"


def test_validate_rejects_non_hermitian():
    p = SdpProblem(c=[1.0], blocks=[np.array([[[0, 1], [0, 0]], np.eye(2)], dtype=complex)])
    with pytest.raises(ValueError):
        p.validate()
