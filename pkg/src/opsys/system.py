"""Concrete operator systems: self-adjoint subspaces of ``M_k``.

A system ``S`` is stored through a Hermitian basis ``b_1..b_d`` that is
orthonormal for the Hilbert-Schmidt inner product. An element of the level
``M_n(S)`` is an ``(nk) x (nk)`` matrix whose ``n x n`` block pattern has
entries in ``S``. Its coefficients are ``coeffs[a, b, j] = Tr(b_j x_ab)``.

The matrix cone at level ``n`` is ``M_n(S) ∩ PSD``. Its span is computed once
by facial reduction: a positive element of maximal rank has support ``P`` and
the cone spans exactly ``{v in S_sa : P v P = v}`` at level one, tensored
with ``M_n`` at level ``n``.
"""

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundMismatch, LevelMismatch, NetNotIncreasing, SolverError
from .linalg import (
    adjoint,
    eigvalsh,
    herm_part,
    hermitian_basis,
    hvec,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    psd_inv_sqrt,
    subspace_from_spanning,
    HSSubspace,
)
from .reports import check, number
from .sdp import SdpBuilder, Status, solve_tolerant

FEAS_TOL = 1e-8
RANK_TOL = 1e-7


def level_matrix(blocks):
    """Assemble an ``(n, n, k, k)`` block array into an ``(nk, nk)`` matrix."""
    n, _, k, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(n * k, n * k)


def level_blocks(matrix, n):
    """Split an ``(nk, nk)`` matrix into its ``(n, n, k, k)`` block array."""
    nk = matrix.shape[0]
    k = nk // n
    return matrix.reshape(n, k, n, k).transpose(0, 2, 1, 3)


def kron_basis(left, right):
    """All ``kron(l, r)`` for ``l`` in ``left`` and ``r`` in ``right``, left index slowest."""
    a, n, _ = left.shape
    b, k, _ = right.shape
    out = np.einsum("aij,bkl->abikjl", left, right)
    return out.reshape(a * b, n * k, n * k)


class OperatorSystem:
    """A self-adjoint subspace of ``M_k`` with its matrix cones and norms.

    The support of the cone and the order unit are computed lazily, once,
    under a lock; afterwards the object is read-only.
    """

    def __init__(self, space: HSSubspace, name=None):
        if not space.selfadjoint:
            raise ValueError("operator systems need an adjoint-closed subspace")
        self.space = space
        self.name = name
        self._lock = threading.Lock()
        self._face = None
        self._unit = None
        self._unit_done = False
        self._level_cache = {}

    # basic structure -------------------------------------------------
    @property
    def basis(self):
        return self.space.basis

    @property
    def dim(self):
        return self.space.dim

    @property
    def k(self):
        return self.space.ambient_dim

    ambient_dim = k

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<OperatorSystem{label} k={self.k} dim={self.dim}>"

    def contains(self, x, tol=1e-10):
        return self.space.contains(x, tol)

    def is_unital(self):
        return self.contains(np.eye(self.k))

    def level_basis(self, n):
        """Real orthonormal basis ``kron(E_a, b_j)`` of ``M_n(S)_sa``."""
        key = ("level", n)
        if key not in self._level_cache:
            self._level_cache[key] = kron_basis(hermitian_basis(n), self.basis)
        return self._level_cache[key]

    def element(self, matrix, level=None):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if level is None:
            level = matrix.shape[0] // self.k
        return LevelElement.from_matrix(self, level, matrix)

    def from_coeffs(self, coeffs):
        return LevelElement.from_coeffs(self, coeffs)

    # facial reduction ---------------------------------------------------
    def face(self):
        """Support data of the level-one cone, computed on first use."""
        if self._face is None:
            with self._lock:
                if self._face is None:
                    self._face = _compute_face(self)
        return self._face

    def face_basis(self, n):
        """Real orthonormal basis of the span of ``M_n(S)_+`` and its compression.

        Returns ``(full, compressed)`` where ``compressed[i] = Q* full[i] Q``
        with ``Q = I_n ⊗ Q1`` the isometry onto the support.
        """
        key = ("face", n)
        if key not in self._level_cache:
            f = self.face()
            E = hermitian_basis(n)
            full = kron_basis(E, f.span_basis) if f.span_basis.shape[0] else \
                np.zeros((0, n * self.k, n * self.k), dtype=np.complex128)
            comp = kron_basis(E, f.compressed) if f.span_basis.shape[0] else \
                np.zeros((0, n * f.rank, n * f.rank), dtype=np.complex128)
            self._level_cache[key] = (full, comp)
        return self._level_cache[key]

    def support_isometry(self, n):
        f = self.face()
        return np.kron(np.eye(n), f.isometry)

    def order_unit(self):
        if not self._unit_done:
            with self._lock:
                if not self._unit_done:
                    self._unit = _compute_order_unit(self)
                    self._unit_done = True
        return self._unit

    # serialization -----------------------------------------------------
    def to_json(self):
        out = {"ambient_dim": self.k, "basis": [matrix_to_json(b) for b in self.basis]}
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, obj):
        basis = np.array([matrix_from_json(b) for b in obj["basis"]])
        k = int(obj["ambient_dim"])
        if basis.shape[1:] != (k, k):
            raise ValueError("basis matrices do not match ambient_dim")
        flat = basis.reshape(len(basis), -1)
        gram = np.conj(flat) @ flat.T
        hermitian = np.allclose(basis, adjoint(basis), atol=1e-12)
        if hermitian and np.allclose(gram, np.eye(len(basis)), atol=1e-12):
            space = HSSubspace(basis=basis, selfadjoint=True)
        else:
            space = subspace_from_spanning(basis, selfadjointize=True)
        return cls(space, name=obj.get("name"))


@dataclass(frozen=True)
class FaceData:
    """Facial-reduction data of the level-one cone."""

    u_star: np.ndarray       # positive element of maximal rank
    projection: np.ndarray   # support projection P of u_star
    isometry: np.ndarray     # k x r isometry onto the range of P
    span_basis: np.ndarray   # Hermitian ONB of {v in S_sa : PvP = v}
    compressed: np.ndarray   # Q* v Q for each span basis element
    certificate: float       # final max Tr((I-P)u) over the normalized cone
    rounds: int

    @property
    def rank(self):
        return self.isometry.shape[1]


def _support(u, tol=RANK_TOL):
    w, v = np.linalg.eigh(herm_part(u))
    thresh = tol * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    cols = v[:, w > thresh]
    return cols @ adjoint(cols), cols


def _compute_face(S):
    k, d = S.k, S.dim
    B = S.basis
    u_acc = np.zeros((k, k), dtype=np.complex128)
    P = np.zeros((k, k), dtype=np.complex128)
    Q = np.zeros((k, 0), dtype=np.complex128)
    certificate = np.inf
    rounds = 0
    for rounds in range(1, k + 2):
        # largest trace of a normalized cone element outside the current support
        sb = SdpBuilder()
        c = sb.variables(d)
        pos = sb.block(k)
        pos.add(c, B)
        cap = sb.block(k)
        cap.add_const(np.eye(k))
        cap.add(c, -B)
        outside = np.eye(k) - P
        sb.maximize(c, np.einsum("ij,aji->a", outside, B).real)
        sol = solve_tolerant(sb.build(), gap_tol=1e-8)
        if sol.status is not Status.OPTIMAL:
            raise SolverError("facial reduction SDP did not reach optimality", sol)
        certificate = -sol.primal_objective
        if certificate <= RANK_TOL:
            break
        u = np.tensordot(sol.y, B, axes=1)
        u_acc = u_acc + herm_part(u)
        P, Q = _support(u_acc)
    # span of the cone: {v in S_sa : P v P = v}
    T = np.stack([hvec(P @ b @ P - b) for b in B])
    if d:
        uu, ss, _ = np.linalg.svd(T, full_matrices=True)
        rank = int(np.sum(ss > 1e-9 * max(1.0, ss[0] if ss.size else 1.0)))
        coef = uu[:, rank:]
    else:
        coef = np.zeros((0, 0))
    span = herm_part(np.tensordot(coef.T, B, axes=1)) if coef.shape[1] else \
        np.zeros((0, k, k), dtype=np.complex128)
    comp = adjoint(Q)[None] @ span @ Q[None] if span.shape[0] else \
        np.zeros((0, Q.shape[1], Q.shape[1]), dtype=np.complex128)
    return FaceData(u_star=u_acc, projection=P, isometry=Q, span_basis=span,
                    compressed=comp, certificate=float(certificate), rounds=rounds)


def _compute_order_unit(S):
    k, d = S.k, S.dim
    if S.is_unital():
        return OrderUnit(matrix=np.eye(k, dtype=np.complex128), t_star=1.0)
    sb = SdpBuilder()
    c = sb.variables(d)
    t = sb.variables(1)
    lower = sb.block(k)
    lower.add(c, S.basis)
    lower.add(t, [-np.eye(k)])
    upper = sb.block(k)
    upper.add_const(np.eye(k))
    upper.add(c, -S.basis)
    sb.maximize(t, [1.0])
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("order-unit SDP did not reach optimality", sol)
    t_star = float(sol.y[t[0]])
    if t_star <= 1e-8:
        return None
    e = herm_part(np.tensordot(sol.y[c], S.basis, axes=1))
    return OrderUnit(matrix=e, t_star=t_star)


@dataclass(frozen=True)
class OrderUnit:
    matrix: np.ndarray
    t_star: float


@dataclass(frozen=True, eq=False)
class LevelElement:
    """An element of ``M_n(S)`` with matrix and coefficient views."""

    system: OperatorSystem
    level: int
    matrix: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, S, n, matrix, tol=1e-10):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (n * S.k, n * S.k):
            raise LevelMismatch(f"matrix shape {matrix.shape} is not level {n} of k={S.k}")
        blocks = level_blocks(matrix, n)
        coeffs = np.einsum("jlk,abkl->abj", S.basis, blocks)
        recon = level_matrix(np.tensordot(coeffs, S.basis, axes=1))
        resid = float(np.linalg.norm(recon - matrix))
        if resid > tol * max(1.0, float(np.linalg.norm(matrix))):
            raise ValueError(f"matrix is not in M_{n}(S): residual {resid:.2e}")
        return cls(S, n, matrix, coeffs)

    @classmethod
    def from_coeffs(cls, S, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        n = coeffs.shape[0]
        if coeffs.shape != (n, n, S.dim):
            raise LevelMismatch(f"coefficient shape {coeffs.shape} does not fit dim {S.dim}")
        matrix = level_matrix(np.tensordot(coeffs, S.basis, axes=1))
        return cls(S, n, matrix, coeffs)

    @property
    def blocks(self):
        return level_blocks(self.matrix, self.level)

    def adjoint(self):
        return LevelElement.from_coeffs(
            self.system, np.conj(self.coeffs.transpose(1, 0, 2)))

    def is_selfadjoint(self, tol=1e-10):
        return float(np.linalg.norm(self.matrix - adjoint(self.matrix))) <= \
            tol * max(1.0, float(np.linalg.norm(self.matrix)))

    def norm(self):
        return op_norm(self.matrix)

    def dilation(self):
        """The self-adjoint element ``[[0, x], [x*, 0]]`` of ``M_2n(S)``."""
        n, d = self.level, self.system.dim
        c = np.zeros((2 * n, 2 * n, d), dtype=np.complex128)
        c[:n, n:] = self.coeffs
        c[n:, :n] = np.conj(self.coeffs.transpose(1, 0, 2))
        return LevelElement.from_coeffs(self.system, c)

    def embed(self, m):
        """Zero-padded copy at level ``m >= n``."""
        if m < self.level:
            raise LevelMismatch("cannot embed into a lower level")
        c = np.zeros((m, m, self.system.dim), dtype=np.complex128)
        c[:self.level, :self.level] = self.coeffs
        return LevelElement.from_coeffs(self.system, c)

    def real_coords(self):
        """Coordinates over ``level_basis`` (self-adjoint elements only)."""
        lb = self.system.level_basis(self.level)
        return np.einsum("aij,ji->a", lb, self.matrix).real

    def __add__(self, other):
        return LevelElement.from_coeffs(self.system, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return LevelElement.from_coeffs(self.system, self.coeffs - other.coeffs)

    def __mul__(self, s):
        return LevelElement.from_coeffs(self.system, s * self.coeffs)

    __rmul__ = __mul__


def make_system(spanning, name=None):
    """Adjoint closure of ``span(spanning)`` as an :class:`OperatorSystem`."""
    return OperatorSystem(subspace_from_spanning(spanning, selfadjointize=True), name=name)


def _check_level(S, x):
    if x.system is not S:
        if x.system.k != S.k or x.system.dim != S.dim or \
                not np.allclose(x.system.basis, S.basis, atol=1e-12):
            raise LevelMismatch("element belongs to a different system")


# cone ----------------------------------------------------------------------

@dataclass(frozen=True)
class ConeMembership:
    in_cone: bool
    min_eigenvalue: float
    certificate: np.ndarray = None   # Hermitian rho with Tr(rho x) < 0
    value: float = 0.0               # Tr(rho x)


def cone_membership(S, x, feas_tol=FEAS_TOL):
    """Decide ``x in M_n(S)_+`` by its smallest eigenvalue.

    Outside the cone the certificate is the normalized projection onto the
    eigenvectors with eigenvalue below ``-feas_tol``; it is positive, so it is
    nonnegative on the whole cone.
    """
    _check_level(S, x)
    if not x.is_selfadjoint():
        raise ValueError("cone membership needs a self-adjoint element")
    w, v = np.linalg.eigh(herm_part(x.matrix))
    if w[0] >= -feas_tol:
        return ConeMembership(True, float(w[0]))
    neg = v[:, w < -feas_tol]
    rho = neg @ adjoint(neg) / neg.shape[1]
    return ConeMembership(False, float(w[0]), rho, float(np.trace(rho @ x.matrix).real))


def max_rank_positive(S):
    """Positive element of maximal rank in ``S`` and its support projection."""
    f = S.face()
    return LevelElement.from_matrix(S, 1, f.u_star, tol=1e-8), f.projection


@dataclass(frozen=True)
class GeneratingReport:
    generating: bool
    witness: np.ndarray = None
    defect: float = 0.0


def is_generating(S, tol=1e-8):
    """``S_sa`` is spanned by its positive elements iff ``P b P = b`` for every basis element."""
    P = S.face().projection
    worst, witness = 0.0, None
    for b in S.basis:
        d = float(np.linalg.norm(P @ b @ P - b))
        if d > worst:
            worst, witness = d, b
    gen = worst <= tol
    return GeneratingReport(gen, None if gen else witness, worst)


def find_order_unit(S):
    """An order unit ``e`` with ``t* I <= e <= I`` (``t* > 1e-8``), or ``None``."""
    u = S.order_unit()
    if u is None:
        return None
    return LevelElement.from_matrix(S, 1, u.matrix, tol=1e-8)


def random_element(S, rng, n, selfadjoint=True):
    """Random element of ``M_n(S)`` with standard normal coordinates."""
    if selfadjoint:
        lb = S.level_basis(n)
        c = rng.standard_normal(lb.shape[0])
        return S.element(np.tensordot(c, lb, axes=1), n)
    c = rng.standard_normal((n, n, S.dim)) + 1j * rng.standard_normal((n, n, S.dim))
    return LevelElement.from_coeffs(S, c)


def random_cone_element(S, rng, n, margin=0.1):
    """Random element of ``M_n(S)_+`` (zero when the cone is trivial)."""
    f = S.face()
    full, comp = S.face_basis(n)
    if full.shape[0] == 0:
        return S.element(np.zeros((n * S.k, n * S.k)), n)
    c = rng.standard_normal(full.shape[0])
    v = np.tensordot(c, full, axes=1)
    vc = np.tensordot(c, comp, axes=1)
    Q = f.isometry
    ustar = np.kron(np.eye(n), adjoint(Q) @ f.u_star @ Q)
    lam_u = eigvalsh(ustar)[0]
    lam_v = eigvalsh(vc)[0]
    t = max(0.0, -lam_v) / lam_u + margin * rng.random()
    return S.element(v + t * np.kron(np.eye(n), f.u_star), n)


# order-unit nets and the associated norms ------------------------------------

@dataclass(frozen=True)
class OrderUnitNet:
    """Finite increasing list ``a_1 <= a_2 <= ...`` of positive elements of ``S``."""

    elements: tuple

    def __init__(self, elements):
        object.__setattr__(self, "elements",
                           tuple(np.asarray(a, dtype=np.complex128) for a in elements))

    def validate(self, S, feas_tol=FEAS_TOL):
        if not self.elements:
            raise NetNotIncreasing("net is empty")
        prev = None
        for i, a in enumerate(self.elements):
            if not S.contains(a, 1e-8):
                raise NetNotIncreasing(f"net element {i} is not in the system")
            if eigvalsh(a)[0] < -feas_tol:
                raise NetNotIncreasing(f"net element {i} is not positive")
            if prev is not None and eigvalsh(a - prev)[0] < -feas_tol:
                raise NetNotIncreasing(f"net element {i} does not dominate element {i - 1}")
            prev = a

    @property
    def last(self):
        return self.elements[-1]


def _norm_a_closed(a, x, n):
    w = psd_inv_sqrt(np.kron(np.eye(n), a))
    return op_norm(w @ x @ w)


def norm_a_sdp(a, x, n, gap_tol=1e-10, feas_tol=1e-9):
    """``inf{t : [[t A, x], [x*, t A]] >= 0}`` with ``A = I_n ⊗ a`` by SDP."""
    A = np.kron(np.eye(n), a)
    m = A.shape[0]
    sb = SdpBuilder()
    t = sb.variables(1)
    blk = sb.block(2 * m)
    blk.add(t, [np.kron(np.eye(2), A)])
    blk.add_const(x, 0, m)
    sb.minimize(t, [1.0])
    sol = solve_tolerant(sb.build(), gap_tol=gap_tol, loosest=10 * gap_tol, feas_tol=feas_tol)
    if sol.status is Status.PRIMAL_INFEASIBLE:
        return np.inf
    if sol.status is not Status.OPTIMAL:
        raise SolverError("norm_a SDP did not reach optimality", sol)
    return float(sol.y[0])


def _norm_a_bisect(a, x, n, iters=60, feas_tol=1e-12):
    A = np.kron(np.eye(n), a)
    w = eigvalsh(a)
    pos = w[w > 1e-12 * max(1.0, float(np.max(np.abs(w))))]
    if pos.size == 0:
        return 0.0 if op_norm(x) == 0 else np.inf
    xn = op_norm(x)
    if xn == 0:
        return 0.0

    def feasible(t):
        big = np.block([[t * A, x], [adjoint(x), t * A]])
        return eigvalsh(big)[0] >= -feas_tol * max(1.0, t)

    hi = 2.0 * xn / float(pos[0])
    if not feasible(hi):
        return np.inf
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def norm_a(S, net, x, cross_check=True, tol=1e-8):
    """Order-unit norm ``min_i inf{t : [[t(I⊗a_i), x], [x*, t(I⊗a_i)]] >= 0}``.

    Invertible net elements use the closed form ``||A^{-1/2} x A^{-1/2}||``;
    with ``cross_check`` the SDP path is solved too and must agree within
    ``tol`` (relative). Singular elements fall back to bisection. Returns
    ``inf`` when no element dominates ``x``.
    """
    _check_level(S, x)
    net.validate(S)
    n = x.level
    best = np.inf
    for a in net.elements:
        w = eigvalsh(a)
        if w[0] > 1e-10 * max(1.0, float(w[-1])):
            val = _norm_a_closed(a, x.matrix, n)
            if cross_check:
                other = norm_a_sdp(a, x.matrix, n)
                if abs(other - val) > tol * max(1.0, val):
                    raise BoundMismatch(
                        f"closed form {val!r} and SDP {other!r} disagree", upper=other, lower=val)
        else:
            val = _norm_a_bisect(a, x.matrix, n)
        best = min(best, val)
    return best


def is_weakly_norm_defining(S, net, samples, tol=1e-6):
    """Compare ``||x||`` with the last-element order-unit norm on samples."""
    if S.face().rank == 0 or not np.any(net.last):
        return check("weakly_norm_defining", np.inf, False, tolerance=tol, reason="no-net")
    net.validate(S)
    dev = 0.0
    for x in samples:
        val = norm_a(S, OrderUnitNet([net.last]), x, cross_check=False)
        dev = max(dev, abs(val - x.norm()))
    return check("weakly_norm_defining", dev, dev <= tol, tolerance=tol, samples=len(samples))


def _sa_level_vars(sb, S, n):
    lb = S.level_basis(n)
    return sb.variables(lb.shape[0]), lb


def regular_dominant(S, x):
    """Smallest ``||u||`` over ``u`` with ``-u <= x <= u`` in ``M_n(S)``.

    Returns ``(value, u)``; ``value`` is ``inf`` when no such ``u`` exists.
    """
    n = x.level
    m = n * S.k
    sb = SdpBuilder()
    c, lb = _sa_level_vars(sb, S, n)
    s = sb.variables(1)
    cap = sb.block(m)
    cap.add(s, [np.eye(m)])
    cap.add(c, -lb)
    plus = sb.block(m)
    plus.add(c, lb)
    plus.add_const(x.matrix)
    minus = sb.block(m)
    minus.add(c, lb)
    minus.add_const(-x.matrix)
    sb.minimize(s, [1.0])
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is Status.PRIMAL_INFEASIBLE:
        return np.inf, None
    if sol.status is not Status.OPTIMAL:
        raise SolverError("regularity SDP did not reach optimality", sol)
    u = herm_part(np.tensordot(sol.y[c], lb, axes=1))
    return float(sol.y[s[0]]), u


def is_matrix_regular(S, level, samples):
    """Check both matrix-regularity conditions on sampled ``x`` with ``||x|| < 1``.

    (a) some ``u`` with ``||u|| <= 1`` satisfies ``-u <= x <= u``;
    (b) for the ``u`` found, ``||x|| <= ||u|| (1 + 1e-8)``.
    """
    worst_a, worst_b, used = 0.0, 0.0, 0
    ok_a = ok_b = True
    for x in samples:
        if x.level != level:
            raise LevelMismatch("sample level differs from the requested level")
        xn = x.norm()
        if not xn < 1.0:
            continue
        used += 1
        val, u = regular_dominant(S, x)
        worst_a = max(worst_a, val)
        if val > 1.0 + 1e-6:
            ok_a = False
        if u is not None:
            un = op_norm(u)
            worst_b = max(worst_b, xn - un * (1 + 1e-8))
            if xn > un * (1 + 1e-8):
                ok_b = False
        else:
            ok_b = False
    return {
        "level": level,
        "samples": used,
        "checks": [
            check("dominating_unit_ball_element", worst_a, ok_a and used > 0, bound=1.0, tolerance=1e-6),
            check("absolute_monotonicity", worst_b, ok_b and used > 0, bound=0.0, tolerance=1e-8),
        ],
        "verdict": ok_a and ok_b and used > 0,
    }


def decomposition_constant(S, x):
    """``min max(||u||, ||v||)`` over ``x = u - v`` with ``u, v`` in the cone.

    ``inf`` when ``x`` lies outside the span of the cone.
    """
    n = x.level
    f = S.face()
    Pn = np.kron(np.eye(n), f.projection)
    if np.linalg.norm(Pn @ x.matrix @ Pn - x.matrix) > 1e-8 * max(1.0, x.norm()):
        return np.inf
    full, comp = S.face_basis(n)
    Qn = S.support_isometry(n)
    xc = adjoint(Qn) @ x.matrix @ Qn
    r = comp.shape[1]
    sb = SdpBuilder()
    c = sb.variables(full.shape[0])
    s = sb.variables(1)
    for sign in (0.0, 1.0):
        pos = sb.block(r)
        pos.add(c, comp)
        pos.add_const(-sign * xc)
        cap = sb.block(r)
        cap.add(s, [np.eye(r)])
        cap.add(c, -comp)
        cap.add_const(sign * xc)
    sb.minimize(s, [1.0])
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is Status.PRIMAL_INFEASIBLE:
        return np.inf
    if sol.status is not Status.OPTIMAL:
        raise SolverError("decomposition SDP did not reach optimality", sol)
    return float(sol.y[s[0]])


def decomposition_constants(S, levels, samples_per_level, rng):
    """Per-level estimates ``rho_n`` over random unit-sphere self-adjoint samples."""
    out = []
    for n in levels:
        worst = 0.0
        for _ in range(samples_per_level):
            x = random_element(S, rng, n)
            x = x * (1.0 / x.norm())
            worst = max(worst, decomposition_constant(S, x))
        out.append({"level": n, "rho": number(worst), "finite": bool(np.isfinite(worst))})
    finite = all(r["finite"] for r in out)
    rhos = [float(r["rho"]) if r["finite"] else np.inf for r in out]
    monotone = all(b >= a - 1e-6 for a, b in zip(rhos, rhos[1:]))
    return {"levels": out, "dualizable": finite, "monotone": monotone}
