"""Linear maps out of operator systems and the norms and cones attached to them.

A :class:`SystemMap` ``phi : S -> M_m`` is stored by the images
``C_j = phi(b_j)`` of the Hermitian basis of ``S``; it acts on ``x in S`` as
``sum_j Tr(b_j x) C_j``. A :class:`LevelFunctional` ``F`` on ``M_n(S)`` is
stored by its values ``F(E_ab ⊗ b_j)``. Both are described by the same
``(n, n, d)`` array, which is why the correspondence between maps into
``M_n`` and functionals on ``M_n(S)`` is exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BoundMismatch, CodomainNotMatrixAlgebra, DomainMismatch, SeparationFailed
from .errors import SolverError
from .kernels import mgs
from .linalg import (
    adjoint,
    eigvalsh,
    herm_part,
    hermitian_basis,
    hvec,
    matrix_from_json,
    matrix_to_json,
    matrix_unit,
    op_norm,
    psd_inv_sqrt,
)
from .sdp import SdpBuilder, Status, solve, solve_tolerant
from .system import (
    FEAS_TOL,
    LevelElement,
    OperatorSystem,
    cone_membership,
    level_blocks,
    level_matrix,
)


class SystemMap:
    """Linear map from an operator system into ``M_m`` (or into a subsystem of it)."""

    def __init__(self, domain, images, codomain=None):
        images = np.asarray(images, dtype=np.complex128)
        if images.ndim != 3 or images.shape[0] != domain.dim or images.shape[1] != images.shape[2]:
            raise DomainMismatch(
                f"images of shape {images.shape} do not match a domain of dimension {domain.dim}")
        if codomain is not None and codomain.k != images.shape[1]:
            raise DomainMismatch("codomain ambient size differs from image size")
        self.domain = domain
        self.images = images
        self.codomain = codomain

    @property
    def out_dim(self):
        return self.images.shape[1]

    @classmethod
    def from_function(cls, domain, fn, codomain=None):
        return cls(domain, np.array([fn(b) for b in domain.basis]), codomain)

    @classmethod
    def identity(cls, S):
        return cls(S, S.basis.copy(), S)

    @classmethod
    def inclusion(cls, S):
        return cls(S, S.basis.copy(), None)

    def __repr__(self):
        return f"<SystemMap {self.domain!r} -> M_{self.out_dim}>"

    def apply(self, x):
        x = np.asarray(x, dtype=np.complex128)
        coords = np.einsum("jlk,kl->j", self.domain.basis, x)
        return np.tensordot(coords, self.images, axes=1)

    def amplify(self, x):
        """``phi^(n)(x) = [phi(x_ab)]`` as an ``(n m) x (n m)`` matrix."""
        if isinstance(x, LevelElement):
            if x.system is not self.domain and not np.allclose(x.system.basis, self.domain.basis):
                raise DomainMismatch("element lives in a different system")
            return level_matrix(np.tensordot(x.coeffs, self.images, axes=1))
        x = np.asarray(x, dtype=np.complex128)
        n = x.shape[0] // self.domain.k
        blocks = level_blocks(x, n)
        out = np.empty((n, n, self.out_dim, self.out_dim), dtype=np.complex128)
        for a in range(n):
            for b in range(n):
                out[a, b] = self.apply(blocks[a, b])
        return level_matrix(out)

    def adjoint_defect(self):
        """Largest ``||phi(b_j) - phi(b_j)*||``; zero iff ``phi(x*) = phi(x)*``."""
        return float(max(np.linalg.norm(c - adjoint(c)) for c in self.images))

    def is_selfadjoint(self, tol=1e-10):
        return self.adjoint_defect() <= tol * max(1.0, float(np.max(np.abs(self.images))))

    def compose(self, first):
        """``self ∘ first``."""
        if first.out_dim != self.domain.k:
            raise DomainMismatch("maps are not composable")
        return SystemMap(first.domain, np.array([self.apply(c) for c in first.images]),
                         self.codomain)

    def coefficient_matrix(self):
        """Matrix of the map between the domain basis and the codomain basis."""
        if self.codomain is None:
            raise CodomainNotMatrixAlgebra("map has no codomain system")
        return np.einsum("ilk,jkl->ij", self.codomain.basis, self.images)

    def __add__(self, other):
        return SystemMap(self.domain, self.images + other.images, self.codomain)

    def __sub__(self, other):
        return SystemMap(self.domain, self.images - other.images, self.codomain)

    def __mul__(self, s):
        return SystemMap(self.domain, s * self.images, self.codomain)

    __rmul__ = __mul__

    def to_json(self):
        out = {"domain": self.domain.to_json(),
               "images": [matrix_to_json(c) for c in self.images]}
        if self.codomain is not None:
            out["codomain"] = self.codomain.to_json()
        else:
            out["codomain_dim"] = self.out_dim
        return out

    @classmethod
    def from_json(cls, obj):
        dom = OperatorSystem.from_json(obj["domain"])
        cod = OperatorSystem.from_json(obj["codomain"]) if "codomain" in obj else None
        return cls(dom, np.array([matrix_from_json(c) for c in obj["images"]]), cod)


class LevelFunctional:
    """Linear functional on ``M_n(S)``, stored by ``values[a, b, j] = F(E_ab ⊗ b_j)``."""

    def __init__(self, system, values):
        values = np.asarray(values, dtype=np.complex128)
        n = values.shape[0]
        if values.shape != (n, n, system.dim):
            raise DomainMismatch(f"values of shape {values.shape} do not fit the system")
        self.system = system
        self.values = values

    @property
    def level(self):
        return self.values.shape[0]

    def __call__(self, x):
        return complex(np.sum(self.values * x.coeffs))

    def representative(self):
        """Matrix ``W`` in ``M_n(S)`` with ``F(x) = Tr(W x)`` for all ``x`` in ``M_n(S)``."""
        return level_matrix(np.tensordot(self.values.transpose(1, 0, 2), self.system.basis,
                                         axes=1))

    @classmethod
    def from_representative(cls, S, W, n):
        W = np.asarray(W, dtype=np.complex128)
        blocks = level_blocks(W, n)
        # F(E_ab ⊗ b_j) = Tr(W (E_ab ⊗ b_j)) = Tr(W_ba b_j)
        vals = np.einsum("bakl,jlk->abj", blocks, S.basis)
        return cls(S, vals)

    def is_selfadjoint(self, tol=1e-10):
        return float(np.max(np.abs(self.values - np.conj(self.values.transpose(1, 0, 2))),
                            initial=0.0)) <= tol

    def __add__(self, other):
        return LevelFunctional(self.system, self.values + other.values)

    def __sub__(self, other):
        return LevelFunctional(self.system, self.values - other.values)

    def __mul__(self, s):
        return LevelFunctional(self.system, s * self.values)

    __rmul__ = __mul__


def as_map(f):
    """Accept a :class:`SystemMap` or a :class:`LevelFunctional` and return the map."""
    return theta_of_functional(f) if isinstance(f, LevelFunctional) else f


def amplify(phi, n, x):
    if x.level != n:
        raise DomainMismatch(f"element is at level {x.level}, not {n}")
    return phi.amplify(x)


def _require_matrix_codomain(phi):
    if not isinstance(phi, SystemMap):
        raise CodomainNotMatrixAlgebra("expected a map into a matrix algebra")


def upsilon(phi):
    """Functional ``u -> sum_kl phi(u_kl)_kl`` on ``M_n(S)`` for ``phi : S -> M_n``."""
    _require_matrix_codomain(phi)
    return LevelFunctional(phi.domain, phi.images.transpose(1, 2, 0))


def upsilon_apply(phi, u):
    """Evaluate the functional of :func:`upsilon` through ``beta phi^(n)(u) beta*``.

    ``beta`` is the row ``[e_1^T, ..., e_n^T]`` in ``M_{1, n^2}``.
    """
    n = phi.out_dim
    beta = np.eye(n).reshape(1, n * n)
    return complex((beta @ phi.amplify(u) @ beta.T)[0, 0])


def theta_of_functional(F):
    """Map ``x -> [F(e_kl ⊗ x)]_kl`` into ``M_n``."""
    return SystemMap(F.system, F.values.transpose(2, 0, 1))


def theta_apply(F, x):
    """Evaluate ``Theta_F(x)`` entrywise from its definition."""
    S, n = F.system, F.level
    out = np.empty((n, n), dtype=np.complex128)
    for k in range(n):
        for l in range(n):
            unit = np.kron(matrix_unit(n, k, l), x)
            out[k, l] = F(S.element(unit, n))
    return out


# complete positivity ------------------------------------------------------

@dataclass
class CPResult:
    cp: bool
    value: float
    witness: LevelElement = None
    trivial_cone: bool = False
    adjoint_defect: float = 0.0


def min_on_cone(S, n, W, feas_tol=FEAS_TOL):
    """``min Tr(W u)`` over ``u in M_n(S)_+`` with ``Tr u = 1``.

    Returns ``(value, u)`` or ``(None, None)`` when the cone is trivial.
    """
    full, comp = S.face_basis(n)
    if full.shape[0] == 0:
        return None, None
    sb = SdpBuilder()
    c = sb.variables(full.shape[0])
    pos = sb.block(comp.shape[1])
    pos.add(c, comp)
    sb.equality(c, np.einsum("aii->a", full).real, 1.0)
    sb.minimize(c, np.einsum("ij,aji->a", W, full).real)
    sol = solve(sb.build(), feas_tol=feas_tol)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("cone minimization SDP did not reach optimality", sol)
    u = herm_part(np.tensordot(sol.y, full, axes=1))
    return float(sol.primal_objective), S.element(u, n)


def is_completely_positive(phi, feas_tol=FEAS_TOL):
    """Decide complete positivity of ``phi : S -> M_n`` with one SDP.

    ``phi`` is CP iff its functional ``Upsilon_phi`` is nonnegative on
    ``M_n(S)_+``. Maps that are not self-adjoint are rejected with the adjoint
    defect as witness. A trivial cone makes every self-adjoint map CP; that
    case is flagged.
    """
    _require_matrix_codomain(phi)
    defect = phi.adjoint_defect()
    if defect > 1e-10 * max(1.0, float(np.max(np.abs(phi.images)))):
        j = int(np.argmax([np.linalg.norm(c - adjoint(c)) for c in phi.images]))
        witness = phi.domain.element(phi.domain.basis[j], 1)
        return CPResult(False, np.nan, witness, adjoint_defect=defect)
    n = phi.out_dim
    W = upsilon(phi).representative()
    value, u = min_on_cone(phi.domain, n, W, feas_tol)
    if value is None:
        return CPResult(True, 0.0, trivial_cone=True)
    return CPResult(value >= -feas_tol, value, None if value >= -feas_tol else u)


# cb norm --------------------------------------------------------------------

def ambient_complement(S):
    """Hermitian orthonormal basis of the orthogonal complement of ``S`` in ``M_k``."""
    key = ("complement",)
    cache = S._level_cache
    if key not in cache:
        H = hermitian_basis(S.k)
        resid = np.array([h - S.space.project(h) for h in H])
        resid = herm_part(resid)
        flat = np.stack([hvec(r) for r in resid])
        q = mgs(flat, 1e-9, scale=1.0)
        k2 = S.k * S.k
        comp = herm_part((q[:, :k2] + 1j * q[:, k2:]).reshape(-1, S.k, S.k)) if q.shape[0] \
            else np.zeros((0, S.k, S.k), dtype=np.complex128)
        cache[key] = comp
    return cache[key]


def partial_trace_first(A, k, n):
    """Trace out the first factor of ``A`` in ``M_k ⊗ M_n`` (batched)."""
    return np.einsum("...ipiq->...pq", A.reshape(*A.shape[:-2], k, n, k, n))


def _add_cb_ball(sb, k, n, J_const, J_terms):
    """Constraints of the cb-norm SDP for the map with Choi-type matrix ``J``.

    ``J = J_const + sum y_t J_t`` lives in ``M_k ⊗ M_n`` (output factor first).
    Returns the two scalar variables whose mean bounds the cb norm and the
    index of the large block.
    """
    kn = k * n
    H = hermitian_basis(kn)
    y0 = sb.variables(len(H))
    y1 = sb.variables(len(H))
    s = sb.variables(2)
    big = sb.block(2 * kn)
    big.add(y0, H, 0, 0)
    big.add(y1, H, kn, kn)
    if J_const is not None:
        big.add_const(-J_const, 0, kn)
    for idx, mats in J_terms:
        big.add(idx, -mats, 0, kn)
    trH = partial_trace_first(H, k, n)
    for si, yi in ((s[0], y0), (s[1], y1)):
        blk = sb.block(n)
        blk.add(si, [np.eye(n)])
        blk.add(yi, -trH)
    return s, big.index


def _extension_terms(sb, S, n, hermitian):
    comp = ambient_complement(S)
    if comp.shape[0] == 0:
        return []
    if hermitian:
        E = hermitian_basis(n)
    else:
        units = np.array([matrix_unit(n, p, q) for p in range(n) for q in range(n)])
        E = np.concatenate([units, 1j * units])
    mats = np.einsum("cij,epq->ceipjq", comp, E).reshape(
        len(comp) * len(E), S.k * n, S.k * n)
    return [(sb.variables(len(mats)), mats)]


@dataclass
class CbNormResult:
    value: float
    upper: float
    lower: float
    witness: np.ndarray = None


def _choi_output_first(phi):
    """``sum_j b_j ⊗ conj(phi(b_j))``: Choi matrix of the Hilbert-Schmidt adjoint."""
    return np.einsum("jab,jpq->apbq", phi.domain.basis, np.conj(phi.images)).reshape(
        phi.domain.k * phi.out_dim, phi.domain.k * phi.out_dim)


def cb_norm_upper(phi, gap_tol=1e-9):
    """Minimum over extensions to ``M_k`` of the cb norm, by SDP.

    Returns ``(value, solution, big_block_index)``.
    """
    S, n = phi.domain, phi.out_dim
    sb = SdpBuilder()
    ext = _extension_terms(sb, S, n, hermitian=False)
    s, big = _add_cb_ball(sb, S.k, n, _choi_output_first(phi), ext)
    sb.minimize(s, [0.5, 0.5])
    sol = solve_tolerant(sb.build(), gap_tol=gap_tol)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("cb-norm SDP did not reach optimality", sol)
    return float(sol.primal_objective), sol, big


def _seed_from_dual(phi, sol, big):
    """Unit-ball element of ``M_n(S)`` read off the optimal dual matrices."""
    S, n = phi.domain, phi.out_dim
    kn = S.k * n
    Z = sol.dual_matrices[big]
    X = 2.0 * Z[:kn, kn:]
    r0 = 2.0 * sol.dual_matrices[big + 1]
    r1 = 2.0 * sol.dual_matrices[big + 2]

    def pinv_sqrt(r):
        w, v = np.linalg.eigh(herm_part(r))
        keep = w > 1e-9 * max(1e-300, float(w[-1]))
        inv = np.zeros_like(w)
        inv[keep] = 1.0 / np.sqrt(w[keep])
        return (v * inv) @ adjoint(v)

    K = np.kron(np.eye(S.k), pinv_sqrt(r0)) @ X @ np.kron(np.eye(S.k), pinv_sqrt(r1))
    # K = sum_j b_j ⊗ K_j ; the candidate is sum_j K_j ⊗ b_j
    Kj = np.einsum("jba,apbq->jpq", S.basis, K.reshape(S.k, n, S.k, n))
    coeffs = Kj.transpose(1, 2, 0)
    x = LevelElement.from_coeffs(S, coeffs)
    nx = x.norm()
    return None if nx == 0 else x * (1.0 / nx)


def _ball_maximizer(S, G, n):
    """``argmax Re Tr(G x)`` over the unit ball of ``M_n(S)``."""
    m = n * S.k
    if S.dim == S.k * S.k:
        u, _, vh = np.linalg.svd(G)
        return S.element(adjoint(vh) @ adjoint(u), n)
    lb = np.einsum("aij,bkl->abikjl", np.array([matrix_unit(n, p, q) for p in range(n)
                                               for q in range(n)]), S.basis)
    lb = lb.reshape(-1, m, m)
    mats = np.concatenate([lb, 1j * lb])
    sb = SdpBuilder()
    c = sb.variables(len(mats))
    blk = sb.block(2 * m)
    blk.add_const(np.eye(2 * m))
    blk.add(c, mats, 0, m)
    sb.maximize(c, np.einsum("ij,aji->a", G, mats).real)
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        return None
    return S.element(np.tensordot(sol.y, mats, axes=1), n)


def _ascend(phi, x, target, iters=60, tol=1e-10):
    """Alternating maximization of ``|<xi, phi^(n)(x) eta>|`` over unit vectors and the ball."""
    S, n = phi.domain, phi.out_dim
    best = op_norm(phi.amplify(x)) / max(x.norm(), 1e-300)
    for _ in range(iters):
        Y = phi.amplify(x)
        u, sv, vh = np.linalg.svd(Y)
        xi, eta = u[:, 0], np.conj(vh[0])
        # coefficient functional x -> xi* phi^(n)(x) eta
        g = np.einsum("ap,jpq,bq->abj", np.conj(xi.reshape(n, n)), phi.images, eta.reshape(n, n))
        G = level_matrix(np.tensordot(g.transpose(1, 0, 2), S.basis, axes=1))
        nxt = _ball_maximizer(S, G, n)
        if nxt is None:
            break
        val = op_norm(phi.amplify(nxt)) / max(nxt.norm(), 1e-300)
        if val <= best + tol:
            best = max(best, val)
            break
        best, x = val, nxt
        if best >= target - 1e-12:
            break
    return best, x


def cb_norm_lower(phi, seed=None, target=np.inf, restarts=4, rng=None):
    """Lower bound ``max ||phi^(n)(x)||`` over sampled unit-ball elements ``x``."""
    S, n = phi.domain, phi.out_dim
    rng = np.random.default_rng(0) if rng is None else rng
    best, arg = 0.0, None
    seeds = [] if seed is None else [seed]
    for _ in range(restarts):
        z = rng.standard_normal((n, n, S.dim)) + 1j * rng.standard_normal((n, n, S.dim))
        x = LevelElement.from_coeffs(S, z)
        seeds.append(x * (1.0 / x.norm()))
    for x in seeds:
        val, xx = _ascend(phi, x, target)
        if val > best:
            best, arg = val, xx
        if best >= target - 1e-7 * max(1.0, target):
            break
    return best, arg


def cb_norm(phi, check_tol=1e-4, gap_tol=1e-9):
    """Completely bounded norm of ``phi : S -> M_n``.

    The upper bound minimizes the cb norm over all extensions of ``phi`` to
    ``M_k`` by SDP; the lower bound evaluates ``||phi^(n)(x)||`` at a unit-ball
    element read off the dual solution and polished by alternating ascent.
    Raises :class:`BoundMismatch` when they differ by more than ``check_tol``.
    """
    phi = as_map(phi)
    _require_matrix_codomain(phi)
    if not np.any(phi.images):
        return CbNormResult(0.0, 0.0, 0.0)
    upper, sol, big = cb_norm_upper(phi, gap_tol=gap_tol)
    seed = _seed_from_dual(phi, sol, big)
    lower, x = (0.0, None)
    if seed is not None:
        lower = op_norm(phi.amplify(seed))
        x = seed
    if upper - lower > 1e-7 * max(1.0, upper):
        lo2, x2 = cb_norm_lower(phi, seed=seed, target=upper, restarts=2)
        if lo2 > lower:
            lower, x = lo2, x2
    if upper - lower > check_tol * max(1.0, upper):
        raise BoundMismatch(f"cb norm bounds disagree: upper {upper!r}, lower {lower!r}",
                            upper=upper, lower=lower)
    return CbNormResult(upper, upper, lower, None if x is None else x.matrix)


# regularized norm ---------------------------------------------------------

@dataclass
class NormResult:
    value: float
    certificate: object = None
    solution: object = None


def norm_r(S, x):
    """Regularized norm of ``x in M_n(S)`` via its self-adjoint dilation.

    Solved as ``min lambda`` subject to ``-lambda <= xhat + w <= lambda`` with
    ``w`` in the cone of ``M_2n(S)``; by conic duality this is the largest value
    of ``F(xhat)`` over positive functionals ``F`` of norm at most one. The
    certificate is that functional, as a matrix representative.
    """
    xh = x.dilation()
    n2 = xh.level
    m = n2 * S.k
    full, comp = S.face_basis(n2)
    sb = SdpBuilder()
    lam = sb.variables(1)
    w = sb.variables(full.shape[0])
    for sign in (1.0, -1.0):
        blk = sb.block(m)
        blk.add(lam, [np.eye(m)])
        blk.add_const(-sign * xh.matrix)
        if full.shape[0]:
            blk.add(w, -sign * full)
    if full.shape[0]:
        pos = sb.block(comp.shape[1])
        pos.add(w, comp)
    sb.minimize(lam, [1.0])
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("regularized-norm SDP did not reach optimality", sol)
    functional = sol.dual_matrices[0] - sol.dual_matrices[1]
    return NormResult(float(sol.y[0]), functional, sol)


# gauge -----------------------------------------------------------------------

@dataclass
class GammaResult:
    value: float
    upper: float
    lower: float


def gamma_upper(S, x):
    """Certified upper bound ``Tr(beta^2) ||beta^-1 x beta^-1||`` from the primal SDP.

    The SDP is ``min Tr C`` over Hermitian ``C`` with
    ``[[C ⊗ I, x], [x, C ⊗ I]] >= 0``.
    """
    n, k = x.level, S.k
    m = n * k
    E = hermitian_basis(n)
    sb = SdpBuilder()
    c = sb.variables(len(E))
    blk = sb.block(2 * m)
    CI = np.array([np.kron(np.eye(2), np.kron(e, np.eye(k))) for e in E])
    blk.add(c, CI)
    blk.add_const(x.matrix, 0, m)
    sb.minimize(c, np.einsum("aii->a", E).real)
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("gauge primal SDP did not reach optimality", sol)
    C = herm_part(np.tensordot(sol.y, E, axes=1))
    tr = float(np.trace(C).real)
    best = np.inf
    for eps in (0.0, 1e-12, 1e-10, 1e-8, 1e-6):
        Ce = C + eps * max(tr, 1e-300) * np.eye(n)
        if eigvalsh(Ce)[0] <= 0:
            continue
        w = np.kron(psd_inv_sqrt(Ce), np.eye(k))
        best = min(best, float(np.trace(Ce).real) * op_norm(w @ x.matrix @ w))
    return best, float(sol.primal_objective)


def gamma_lower(S, x):
    """``sup Upsilon_phi(x)`` over self-adjoint ``phi : S -> M_n`` with cb norm at most one."""
    n, k, d = x.level, S.k, S.dim
    E = hermitian_basis(n)
    sb = SdpBuilder()
    g = sb.variables(d * len(E))
    mats = np.einsum("jab,epq->jeapbq", S.basis, np.conj(E)).reshape(d * len(E), k * n, k * n)
    ext = _extension_terms(sb, S, n, hermitian=True)
    s, _ = _add_cb_ball(sb, k, n, None, [(g, mats)] + ext)
    cap = sb.block(1)
    cap.add_const([[2.0]])
    cap.add(s, -np.ones((2, 1, 1)))
    # Upsilon_phi(x) = sum_{a,b,j} phi(b_j)_ab x[a,b,j] with phi(b_j) = sum_e g_je E_e
    obj = np.einsum("eab,abj->je", E, x.coeffs).real.reshape(-1)
    sb.maximize(g, obj)
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("gauge dual SDP did not reach optimality", sol)
    return -float(sol.primal_objective)


def gamma_norm(S, x, check_tol=1e-4):
    """Gauge ``inf{Tr(beta^2) ||w|| : x = beta w beta}`` of a self-adjoint ``x``.

    Computed as the supremum of ``Upsilon_phi(x)`` over self-adjoint ``phi`` in
    the cb unit ball and cross-checked against a certified primal upper bound.
    """
    if not x.is_selfadjoint():
        raise ValueError("gamma_norm needs a self-adjoint element")
    if x.norm() == 0:
        return GammaResult(0.0, 0.0, 0.0)
    upper, _ = gamma_upper(S, x)
    lower = gamma_lower(S, x)
    if abs(upper - lower) > check_tol * max(1.0, upper):
        raise BoundMismatch(f"gauge bounds disagree: upper {upper!r}, lower {lower!r}",
                            upper=upper, lower=lower)
    return GammaResult(lower, upper, lower)


def dual_gamma_norm(F):
    """``sup F(x)`` over self-adjoint ``x in M_n(S)`` with gauge at most one."""
    S, n, k = F.system, F.level, F.system.k
    m = n * k
    lb = S.level_basis(n)
    E = hermitian_basis(n)
    sb = SdpBuilder()
    xv = sb.variables(len(lb))
    c = sb.variables(len(E))
    blk = sb.block(2 * m)
    blk.add(c, np.array([np.kron(np.eye(2), np.kron(e, np.eye(k))) for e in E]))
    blk.add(xv, lb, 0, m)
    cap = sb.block(1)
    cap.add_const([[1.0]])
    cap.add(c, -np.einsum("aii->a", E).real.reshape(-1, 1, 1))
    W = F.representative()
    sb.maximize(xv, np.einsum("ij,aji->a", W, lb).real)
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("dual gauge SDP did not reach optimality", sol)
    return -float(sol.primal_objective)


# separation -------------------------------------------------------------------

@dataclass
class Separation:
    functional: LevelFunctional
    representative: np.ndarray   # Hermitian G with g(y) = Tr(G y)
    delta: float                 # g(v0) = -delta
    kind: str                    # "span" or "face"


def separate_from_cone(S, v0, feas_tol=FEAS_TOL):
    """Positive functional ``g`` with ``g(v0) < 0`` for ``v0`` outside ``M_n(S)_+``.

    If ``v0`` leaves the span of the cone, ``g`` is minus its normalized
    component orthogonal to that span (so ``g`` vanishes on the cone).
    Otherwise ``g = Tr(Q sigma Q* .)`` where ``sigma`` is the optimal density
    of ``max t : Q* v0 Q >= t I`` and ``Q`` is the support isometry.
    """
    n = v0.level
    mem = cone_membership(S, v0, feas_tol)
    if mem.in_cone:
        raise SeparationFailed("element is within tolerance of the cone")
    full, comp = S.face_basis(n)
    if full.shape[0]:
        coords = np.einsum("aij,ji->a", full, v0.matrix).real
        vh = v0.matrix - np.tensordot(coords, full, axes=1)
    else:
        vh = v0.matrix.copy()
    nh = float(np.linalg.norm(vh))
    if nh > feas_tol:
        G = herm_part(-vh / nh)
        return Separation(LevelFunctional.from_representative(S, G, n), G, nh, "span")
    Qn = S.support_isometry(n)
    vc = adjoint(Qn) @ v0.matrix @ Qn
    r = vc.shape[0]
    sb = SdpBuilder()
    t = sb.variables(1)
    blk = sb.block(r)
    blk.add_const(vc)
    blk.add(t, [-np.eye(r)])
    sb.maximize(t, [1.0])
    sol = solve_tolerant(sb.build(), gap_tol=1e-8)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("separation SDP did not reach optimality", sol)
    tstar = float(sol.y[0])
    if tstar >= -feas_tol:
        raise SeparationFailed("element is within tolerance of the cone")
    sigma = herm_part(sol.dual_matrices[0])
    sigma = sigma / float(np.trace(sigma).real)
    G = herm_part(Qn @ sigma @ adjoint(Qn))
    return Separation(LevelFunctional.from_representative(S, G, n), G,
                      -float(np.trace(G @ v0.matrix).real), "face")


@dataclass
class MatrixConvexSet:
    """Levels ``1..max_level`` of a matrix convex set over ``S``.

    ``kind`` is ``"cone"`` (the matrix cones ``M_m(S)_+``) or ``"ball"`` (the
    closed unit balls of ``M_m(S)_sa``).
    """

    system: OperatorSystem
    kind: str
    max_level: int = 3

    def contains(self, w, tol=FEAS_TOL):
        if self.kind == "cone":
            return cone_membership(self.system, w, tol).in_cone
        return w.norm() <= 1.0 + tol

    def sample(self, rng, m):
        from .system import random_cone_element, random_element
        if self.kind == "cone":
            return random_cone_element(self.system, rng, m)
        w = random_element(self.system, rng, m)
        nw = w.norm()
        return w * (rng.random() / nw) if nw else w


def effros_winkler_separate(K, v0, samples=20, seed=0, margin=1e-7):
    """Map ``psi : S -> M_n`` with ``Re psi^(m)(w) <= I`` on ``K`` and ``psi^(n)(v0) not <= I``.

    Cones use ``psi = -c Theta_g`` with ``g`` from :func:`separate_from_cone`;
    balls use a compression onto the Schmidt support of an extremal
    eigenvector of ``v0``. The certificate is re-verified on samples of ``K``
    at every level up to ``K.max_level`` and exactly at ``v0``; ``None`` is
    returned when no verified map is found.
    """
    S, n = K.system, v0.level
    if K.kind == "cone":
        try:
            sep = separate_from_cone(S, v0)
        except SeparationFailed:
            return None
        theta = theta_of_functional(sep.functional)
        lam = float(eigvalsh(-herm_part(theta.amplify(v0)))[-1])
        if lam <= margin:
            return None
        psi = theta * (-2.0 / lam)
    elif K.kind == "ball":
        if not v0.is_selfadjoint():
            return None
        w, v = np.linalg.eigh(herm_part(v0.matrix))
        top, sign = (v[:, -1], 1.0) if w[-1] >= -w[0] else (v[:, 0], -1.0)
        if max(w[-1], -w[0]) <= 1.0 + margin:
            return None
        # Schmidt vectors of the eigenvector in C^n ⊗ C^k span the compression range
        _, _, vh = np.linalg.svd(top.reshape(n, S.k))
        V = adjoint(vh[:min(n, S.k)])
        if V.shape[1] < n:
            V = np.hstack([V, np.zeros((S.k, n - V.shape[1]))])
        psi = SystemMap.from_function(S, lambda b: sign * adjoint(V) @ b @ V)
    else:
        raise ValueError(f"unknown matrix convex set kind {K.kind!r}")
    rng = np.random.default_rng(seed)
    for m in range(1, K.max_level + 1):
        for _ in range(samples):
            wm = K.sample(rng, m)
            if eigvalsh(herm_part(psi.amplify(wm)))[-1] > 1.0 + 1e-9:
                return None
    if eigvalsh(herm_part(psi.amplify(v0)))[-1] <= 1.0 + margin:
        return None
    return psi


# map constructors ---------------------------------------------------------------

def random_cp_map(S, rng, m, kraus=2):
    """``x -> sum_t V_t* x V_t`` into ``M_m`` with ``||sum_t V_t* V_t|| = 1``.

    Such maps are completely positive with cb norm at most one.
    """
    V = rng.standard_normal((kraus, S.k, m)) + 1j * rng.standard_normal((kraus, S.k, m))
    V /= np.sqrt(op_norm(np.einsum("tki,tkj->ij", np.conj(V), V)))
    images = np.einsum("tki,jkl,tlm->jim", np.conj(V), S.basis, V)
    return SystemMap(S, images)


def compression(S, V, codomain=None):
    """``x -> V* x V`` for a ``k x m`` matrix ``V``."""
    V = np.asarray(V, dtype=np.complex128)
    return SystemMap(S, adjoint(V) @ S.basis @ V, codomain)


def schur_multiplier(S, M, codomain=None):
    """Entrywise product ``x -> M ∘ x``; CP when ``M`` is positive semidefinite."""
    M = np.asarray(M, dtype=np.complex128)
    return SystemMap(S, M[None] * S.basis, codomain)
