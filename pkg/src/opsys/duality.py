"""The dual system ``S^d`` of a finite-dimensional operator system and its functor.

Functionals on ``M_n(S)`` are identified with maps ``S -> M_n`` (see
:mod:`opsys.maps`). At level ``n`` the dual cone consists of the completely
positive maps. The dual norm ``||f||^r`` is the supremum of the pairing of the
self-adjoint dilation ``f^`` against positive elements ``u`` of ``M_2n(S)``
with ``u <= D ⊗ I_k`` for a density matrix ``D``. Those ``u`` are exactly the
positive elements whose associated functionals on ``M_2n(S*)`` lie in the
positive unit ball.

In finite dimension ``S`` equals its completion and its bidual, so every weak*
topology here is the norm topology and nothing about it is checked.
"""

from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .errors import (
    DomainMismatch,
    NotCCP,
    NotGenerating,
    SeparationFailed,
    SolverError,
)
from .linalg import adjoint, herm_part, hermitian_basis, op_norm
from .maps import (
    LevelFunctional,
    SystemMap,
    as_map,
    cb_norm,
    is_completely_positive,
    random_cp_map,
    separate_from_cone,
    theta_of_functional,
    upsilon,
)
from .reports import check, number
from .sdp import SdpBuilder, Status, solve_tolerant
from .system import (
    cone_membership,
    decomposition_constants,
    find_order_unit,
    is_generating,
    make_system,
    random_cone_element,
    random_element,
)

SANDWICH = 4.0


def _as_functional(f):
    if isinstance(f, LevelFunctional):
        return f
    if isinstance(f, SystemMap):
        return upsilon(f)
    raise TypeError(f"expected a LevelFunctional or SystemMap, got {type(f).__name__}")


@dataclass(frozen=True)
class DualSystem:
    """``S^d``: the functionals on ``S`` with the dual matrix cones and the norm ``||.||^r``.

    ``dual_basis[j]`` represents the coordinate functional ``x -> Tr(b_j x)``.
    ``degenerate`` is set when the norm vanishes on nonzero functionals,
    which happens exactly when the cone of ``S`` does not span ``S_sa``;
    ``kernel`` then holds representatives of those functionals.
    """

    base: object
    dual_basis: np.ndarray
    generating: bool
    degenerate: bool
    kernel: np.ndarray
    checks: tuple = field(default=())

    @property
    def dim(self):
        return self.base.dim

    def cone_oracle(self, f):
        return is_completely_positive(as_map(f))

    def norm_oracle(self, f):
        return dual_norm(self, f)

    def functional(self, values):
        return LevelFunctional(self.base, values)

    def to_json(self):
        return {
            "base": self.base.to_json(),
            "dim": self.dim,
            "generating": self.generating,
            "degenerate": self.degenerate,
            "kernel_dim": int(self.kernel.shape[0]),
            "checks": list(self.checks),
        }


def _cone_kernel(S):
    """Hermitian ONB of the self-adjoint part of ``S`` orthogonal to the span of its cone."""
    span = S.face().span_basis
    B = S.basis
    if span.shape[0]:
        coords = np.einsum("aij,bji->ba", span, B).real
        resid = B - np.einsum("ba,aij->bij", coords, span)
    else:
        resid = B.copy()
    flat = resid.reshape(len(B), -1)
    u, s, _ = np.linalg.svd(flat.T, full_matrices=False)
    keep = s > 1e-8
    if not np.any(keep):
        return np.zeros((0, S.k, S.k), dtype=np.complex128)
    # the residuals are Hermitian; so are real combinations of them
    coeffs = np.linalg.lstsq(flat.T, u[:, keep], rcond=None)[0]
    return herm_part(np.einsum("bc,bij->cij", coeffs.real, resid))


def dual_system(S, verify=True):
    """Build ``S^d``; for a generating ``S`` check ``iota`` on a sample of coordinate functionals."""
    gen = is_generating(S).generating
    kernel = _cone_kernel(S)
    checks = []
    D = DualSystem(S, S.basis.copy(), gen, kernel.shape[0] > 0, kernel)
    if verify and gen:
        count = min(S.dim, 6)
        worst, best = 0.0, np.inf
        for j in range(count):
            f = LevelFunctional(S, np.eye(S.dim)[j][None, None, :].astype(np.complex128))
            rep = iota_compare(D, f)
            worst, best = max(worst, rep.ratio), min(best, rep.r_value)
        checks.append(check("iota_bounded_below", best, best > 1e-8, bound=0.0,
                            samples=count))
        checks.append(check("iota_ratio_bounded", worst, np.isfinite(worst),
                            samples=count))
        state = positive_state(S, np.random.default_rng(0))
        rep = iota_compare(D, state)
        checks.append(check("iota_isometric_on_state", abs(rep.ratio - 1.0),
                            abs(rep.ratio - 1.0) <= 1e-5, tolerance=1e-5))
    if kernel.shape[0]:
        f = LevelFunctional.from_representative(S, kernel[0], 1)
        value = dual_norm(D, f)
        checks.append(check("norm_vanishes_on_kernel", value, value <= 1e-8, tolerance=1e-8))
    return DualSystem(S, D.dual_basis, gen, D.degenerate, kernel, tuple(checks))


def _dilation_values(values):
    n, _, d = values.shape
    out = np.zeros((2 * n, 2 * n, d), dtype=np.complex128)
    out[:n, n:] = values
    out[n:, :n] = np.conj(values.transpose(1, 0, 2))
    return out


def dual_norm(D, f, gap_tol=1e-9):
    """``||f||^r``: largest ``|<f^, u>|`` over the positive unit ball of ``M_2n(S*)``.

    One SDP in ``u`` (restricted to the span of the cone of ``M_2n(S)``) and a
    density ``D`` with ``u <= D ⊗ I_k``.
    """
    f = _as_functional(f)
    S = D.base if isinstance(D, DualSystem) else D
    if f.system.dim != S.dim:
        raise DomainMismatch("functional does not act on this system")
    if not np.any(f.values):
        return 0.0
    n2 = 2 * f.level
    k = S.k
    full, comp = S.face_basis(n2)
    if full.shape[0] == 0:
        return 0.0
    W = LevelFunctional(S, _dilation_values(f.values)).representative()
    E = hermitian_basis(n2)
    sb = SdpBuilder()
    u = sb.variables(full.shape[0])
    dv = sb.variables(len(E))
    pos = sb.block(comp.shape[1])
    pos.add(u, comp)
    dens = sb.block(n2)
    dens.add(dv, E)
    cap = sb.block(n2 * k)
    cap.add(dv, np.einsum("aij,kl->aikjl", E, np.eye(k)).reshape(len(E), n2 * k, n2 * k))
    cap.add(u, -full)
    sb.equality(dv, np.einsum("aii->a", E).real, 1.0)
    sb.maximize(u, np.einsum("ij,aji->a", W, full).real)
    sol = solve_tolerant(sb.build(), gap_tol=gap_tol)
    if sol.status is not Status.OPTIMAL:
        raise SolverError("dual-norm SDP did not reach optimality", sol)
    return max(0.0, -float(sol.primal_objective))


@dataclass
class DualNormReport:
    level: int
    f: np.ndarray
    cb_value: float
    r_value: float
    ratio: float
    positive: bool = None
    flags: tuple = ()

    @property
    def contraction_ok(self):
        return self.r_value <= self.cb_value + 1e-8

    def to_json(self):
        return {"level": self.level, "cb_value": number(self.cb_value),
                "r_value": number(self.r_value), "ratio": number(self.ratio),
                "positive": self.positive, "flags": list(self.flags),
                "contraction_ok": self.contraction_ok}


def iota_compare(D, f, positive=False):
    """Compare ``cb_norm(f)`` with ``||f||^r``; ``positive=True`` also runs the cone test."""
    f = _as_functional(f)
    cb = cb_norm(theta_of_functional(f)).value
    r = dual_norm(D, f)
    ratio = cb / max(r, 1e-12)
    flags = []
    if r <= 1e-12 and cb > 1e-12:
        ratio = np.inf
        flags.append("NotDualizable")
    if cb <= 1e-12 and r <= 1e-12:
        ratio = 1.0
    pos = D.cone_oracle(f).cp if positive else None
    return DualNormReport(f.level, f.values, cb, r, ratio, pos, tuple(flags))


def positive_state(S, rng, level=1):
    """Random completely positive functional on ``M_level(S)`` from Kraus operators."""
    return upsilon(random_cp_map(S, rng, level))


def random_functional(S, rng, level=1):
    """Random self-adjoint functional on ``M_level(S)``."""
    v = rng.standard_normal((level, level, S.dim)) + 1j * rng.standard_normal((level, level, S.dim))
    v = 0.5 * (v + np.conj(v.transpose(1, 0, 2)))
    return LevelFunctional(S, v)


def dual_cone_generating(D, rng, samples=None):
    """Check that the level-one dual cone spans ``S*``: states ``Tr(rho .)`` restricted to ``S``."""
    S = D.base
    samples = samples or 2 * S.dim
    vals, ok = [], True
    for _ in range(samples):
        f = positive_state(S, rng)
        ok &= bool(D.cone_oracle(f).cp)
        vals.append(np.concatenate([f.values.real.ravel(), f.values.imag.ravel()]))
    rank = int(np.linalg.matrix_rank(np.array(vals), tol=1e-9))
    return check("dual_cone_generating", rank, ok and rank == S.dim, bound=S.dim,
                 samples=samples)


# functor ------------------------------------------------------------------------

@dataclass(frozen=True)
class DualMap:
    """Linear map ``T* -> S*`` acting on level functionals by ``values -> values @ matrix``."""

    source: object   # T
    target: object   # S
    matrix: np.ndarray

    def __call__(self, g):
        g = _as_functional(g)
        if g.system.dim != self.source.dim:
            raise DomainMismatch("functional does not act on the source system")
        return LevelFunctional(self.target, np.tensordot(g.values, self.matrix, axes=1))

    def compose(self, first):
        """``self ∘ first``."""
        if first.target.dim != self.source.dim:
            raise DomainMismatch("dual maps are not composable")
        return DualMap(first.source, self.target, first.matrix @ self.matrix)


def _codomain(phi):
    if phi.codomain is not None:
        return phi.codomain
    m = phi.out_dim
    units = np.zeros((m * m, m, m), dtype=np.complex128)
    for i in range(m * m):
        units[i].flat[i] = 1.0
    return make_system(units, name=f"M_{m}")


def dual_of(phi):
    """``phi^d`` without precondition checks."""
    T = _codomain(phi)
    mapped = SystemMap(phi.domain, phi.images, T)
    resid = max(float(np.linalg.norm(T.space.residual(c))) for c in phi.images) \
        if phi.domain.dim else 0.0
    if resid > 1e-9 * max(1.0, float(np.max(np.abs(phi.images), initial=0.0))):
        raise DomainMismatch(f"map leaves its codomain system (residual {resid:.3g})")
    return DualMap(T, phi.domain, mapped.coefficient_matrix())


def functor_dual_map(phi, samples=2, levels=(1, 2), rng=None):
    """``phi^d : T* -> S*`` for a completely contractive CP map ``phi : S -> T``.

    Raises :class:`NotCCP` unless ``phi`` is CP with cb norm at most one. The
    report checks that ``phi^d`` sends sampled dual-cone elements into the dual
    cone and does not increase ``||.||^r``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    cp = is_completely_positive(SystemMap(phi.domain, phi.images))
    if not cp.cp:
        raise NotCCP(f"map is not completely positive (cone minimum {cp.value!r})")
    cb = cb_norm(SystemMap(phi.domain, phi.images)).value
    if cb > 1.0 + 1e-8:
        raise NotCCP(f"map is not completely contractive (cb norm {cb!r})")
    pd = dual_of(phi)
    T, S = pd.source, pd.target
    DS, DT = dual_system(S, verify=False), dual_system(T, verify=False)
    entries = [check("cb_norm", cb, True, bound=1.0, tolerance=1e-8)]
    cone_ok, worst_norm = True, -np.inf
    tasks = []
    for m in levels:
        for _ in range(samples):
            tasks.append(positive_state(T, rng, m))
            tasks.append(random_functional(T, rng, m))

    def run(g):
        h = pd(g)
        return DT.cone_oracle(g).cp, DS.cone_oracle(h).cp, dual_norm(DS, h) - dual_norm(DT, g)

    for g_pos, h_pos, excess in ordered_map(run, tasks):
        if g_pos and not h_pos:
            cone_ok = False
        worst_norm = max(worst_norm, excess)
    entries.append(check("dual_cone_preserved", float(not cone_ok), cone_ok, samples=len(tasks)))
    if tasks:
        entries.append(check("dual_norm_contractive", worst_norm, worst_norm <= 1e-6,
                             bound=0.0, tolerance=1e-6, samples=len(tasks)))
    return pd, {"checks": entries}


def functor_laws(phi, psi, tol=1e-9):
    """Contravariance ``(psi ∘ phi)^d = phi^d ∘ psi^d`` and the identity law, as checks."""
    composite = SystemMap(phi.domain, np.array([psi.apply(c) for c in phi.images]),
                          psi.codomain)
    lhs = dual_of(composite).matrix
    rhs = dual_of(phi).compose(dual_of(psi)).matrix
    dev = float(np.max(np.abs(lhs - rhs), initial=0.0))
    ident = dual_of(SystemMap.identity(phi.domain)).matrix
    dev_id = float(np.max(np.abs(ident - np.eye(phi.domain.dim)), initial=0.0))
    return [check("contravariance", dev, dev <= tol, tolerance=tol),
            check("identity", dev_id, dev_id <= tol, tolerance=tol)]


def faithfulness_witness(phi, psi, rng=None):
    """A state ``g`` of the common codomain with ``phi^d(g) != psi^d(g)``, or ``None``.

    Returns ``(g, difference)``; the difference is the largest coefficient gap.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    dphi, dpsi = dual_of(phi), dual_of(psi)
    for _ in range(8):
        g = positive_state(dphi.source, rng)
        diff = float(np.max(np.abs(dphi(g).values - dpsi(g).values), initial=0.0))
        if diff > 1e-9:
            return g, diff
    return None


# bidual comparison -------------------------------------------------------------------

def _attaining_compression(S, v):
    """Isometry ``V`` with ``||(I ⊗ V)* v (I ⊗ V)|| = ||v||``.

    Its range holds the ``C^k`` Schmidt factors of a top singular pair of ``v``.
    """
    n, k = v.level, S.k
    u, _, vh = np.linalg.svd(v.matrix)
    vecs = []
    for w in (u[:, 0], np.conj(vh[0])):
        _, _, sh = np.linalg.svd(w.reshape(n, k))
        vecs.append(sh[:min(n, k)].T)
    q, r = np.linalg.qr(np.hstack(vecs))
    keep = np.abs(np.diag(r)) > 1e-10 * max(1.0, float(np.max(np.abs(np.diag(r)))))
    return q[:, keep] if np.any(keep) else q[:, :1]


def _bidual_norm(DS, v, family):
    """Lower estimate of ``||v||`` in ``M_n((S^d)^d)`` over a finite family of dual unit vectors.

    ``family`` holds pairs ``(omega, ||omega||^r)``; the attaining compression
    of ``v`` is added.
    """
    S = DS.base
    V = _attaining_compression(S, v)
    own = SystemMap(S, adjoint(V) @ S.basis @ V)
    own_norm = dual_norm(DS, own)
    best = 0.0
    for omega, nrm in list(family) + [(own, own_norm)]:
        if nrm > 1e-12:
            best = max(best, op_norm(omega.amplify(v)) / nrm)
    return best


def double_dual_compare(S, levels=(1, 2, 3), samples=4, rng=None, family_size=2, tol=1e-5):
    """Compare ``S`` with ``(S^d)^d`` under the canonical pairing.

    At each level: positive samples are positive on every sampled dual-cone
    element; non-positive samples are separated by a completely positive map
    (the bipolar direction); the bidual norm of positive samples, estimated
    over a finite family of dual unit vectors containing an attaining
    compression, matches ``||v||``. The same is checked for general samples
    and asserted when ``S`` contains the identity. Systems with an order unit
    but without the identity can fail it: positive functionals there may have
    ``||f||^r < ||f||_cb``, which pushes bidual norms above ``||v||``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if not is_generating(S).generating:
        raise NotGenerating("double dual comparison needs a generating cone")
    DS = dual_system(S, verify=False)
    unital = S.is_unital()
    has_unit = find_order_unit(S) is not None
    family = []
    for m in range(1, family_size + 1):
        omega = random_cp_map(S, rng, m)
        family.append((omega, dual_norm(DS, omega)))
    out_levels = []
    for n in levels:
        pos = [random_cone_element(S, rng, n) for _ in range(samples)]
        gen = [random_element(S, rng, n) for _ in range(samples)]
        cplx = [random_element(S, rng, n, selfadjoint=False) for _ in range(samples)]
        tests = [random_cp_map(S, rng, m) for m in (1, 2, n) for _ in range(samples)]

        # (i) cone correspondence
        worst_pos = min(float(np.linalg.eigvalsh(herm_part(w.amplify(u)))[0])
                        / max(1.0, u.norm()) for u in pos for w in tests)
        separated, needed = 0, 0
        for v in gen:
            if cone_membership(S, v).in_cone:
                continue
            needed += 1
            try:
                sep = separate_from_cone(S, v)
            except SeparationFailed:
                continue
            theta = theta_of_functional(sep.functional)
            if is_completely_positive(theta).cp and \
                    float(np.linalg.eigvalsh(herm_part(theta.amplify(v)))[0]) < 0:
                separated += 1
        # (ii) and (iii) norms
        dev_pos = max(abs(_bidual_norm(DS, u, family) - u.norm()) / max(1.0, u.norm())
                      for u in pos)
        dev_gen = max(abs(_bidual_norm(DS, v, family) - v.norm()) / max(1.0, v.norm())
                      for v in gen + cplx)
        out_levels.append({
            "level": n,
            "checks": [
                check("positive_pairing", worst_pos, worst_pos >= -1e-8, bound=0.0,
                      tolerance=1e-8, samples=len(pos) * len(tests)),
                check("bipolar_separation", needed - separated, separated == needed,
                      bound=0, samples=needed),
                check("positive_norm", dev_pos, dev_pos <= tol, bound=0.0, tolerance=tol,
                      samples=len(pos)),
                check("isometry", dev_gen, dev_gen <= tol or not unital, bound=0.0,
                      tolerance=tol, samples=len(gen) + len(cplx), asserted=unital),
            ],
        })
    return {"system": S.name, "unital": unital, "order_unit": has_unit, "levels": out_levels,
            "dual_cone_generating": dual_cone_generating(DS, rng)}


def verify_theorem_suite(S, levels=(1, 2), samples=4, rng=None):
    """Check the equivalences linking the cone of ``S`` and the map ``iota``.

    generating ⟺ finite decomposition constant at level one;
    the cone spans ``S_sa`` ⟺ ``||.||^r`` vanishes on no coordinate direction;
    finite decomposition constants at the given levels ⟺ bounded ``iota`` ratios.
    Unital systems also get the factor-4 sandwich.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    gen = is_generating(S)
    D = dual_system(S, verify=False)
    entries = []

    dc1 = decomposition_constants(S, [1], samples, rng)
    entries.append(check("generating_iff_bounded_below", float(dc1["levels"][0]["rho"])
                         if dc1["dualizable"] else np.inf,
                         gen.generating == dc1["dualizable"],
                         generating=gen.generating, finite=dc1["dualizable"]))

    norms = [dual_norm(D, LevelFunctional(S, np.eye(S.dim)[j][None, None, :]
                                          .astype(np.complex128)))
             for j in range(S.dim)]
    kernel_norms = [dual_norm(D, LevelFunctional.from_representative(S, w, 1))
                    for w in D.kernel]
    injective = (min(norms, default=0.0) > 1e-8) and not kernel_norms
    entries.append(check("span_iff_injective", max(kernel_norms, default=0.0),
                         injective == gen.generating,
                         generating=gen.generating, injective=injective,
                         min_coordinate_norm=number(min(norms, default=0.0))))

    dcl = decomposition_constants(S, list(levels), samples, rng)
    ratios = []
    for n in levels:
        for _ in range(samples):
            ratios.append(iota_compare(D, random_functional(S, rng, n)).ratio)
    bounded = all(np.isfinite(r) for r in ratios)
    worst = max(ratios, default=0.0)
    entries.append(check("dualizable_iff_bounded_ratios", worst,
                         dcl["dualizable"] == bounded, dualizable=dcl["dualizable"],
                         bounded=bounded, constants=dcl["levels"]))
    if S.is_unital():
        entries.append(check("sandwich", worst, bounded and worst <= SANDWICH + 1e-4,
                             bound=SANDWICH, tolerance=1e-4))
    return {"system": S.name, "checks": entries}
