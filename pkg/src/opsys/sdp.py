"""Primal-dual interior-point solver for block-diagonal semidefinite programs.

User form::

    minimize    c . y
    subject to  F0_b + sum_i y_i Fi_b  >= 0   for every block b
                A_eq y = b_eq

The dual of this program is::

    maximize    -sum_b <F0_b, Z_b>
    subject to  sum_b <Fi_b, Z_b> = c_i,   Z_b >= 0

(with equality multipliers when ``A_eq`` is present). Matrices are complex
Hermitian and handled natively.

Internally equalities are removed by a nullspace parametrization, directions
that do not move the constraint matrices are dropped, and the remaining
problem is solved through a homogeneous self-dual embedding using the HKM
direction with Mehrotra predictor-corrector steps. The embedding gives
infeasibility certificates in addition to optimal pairs.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import linalg as sla

from .errors import NumericalBreakdown
from .kernels import SparseBlock, schur_block
from .linalg import adjoint, herm_part, hvec, matrix_from_json, matrix_to_json


class Status(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    INDETERMINATE = "Indeterminate"


@dataclass
class SdpProblem:
    """``blocks[b]`` has shape ``(m + 1, d_b, d_b)``: ``F0`` followed by ``F1..Fm``."""

    c: np.ndarray
    blocks: list
    eq_a: np.ndarray = None
    eq_b: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        m = self.c.size
        blocks = []
        for blk in self.blocks:
            blk = np.asarray(blk, dtype=np.complex128)
            if blk.ndim != 3 or blk.shape[0] != m + 1 or blk.shape[1] != blk.shape[2]:
                raise ValueError(
                    f"block of shape {blk.shape} does not match {m} variables")
            blocks.append(blk)
        self.blocks = blocks
        if self.eq_a is None:
            self.eq_a = np.zeros((0, m))
            self.eq_b = np.zeros(0)
        self.eq_a = np.asarray(self.eq_a, dtype=float).reshape(-1, m)
        self.eq_b = np.asarray(self.eq_b, dtype=float).ravel()
        if self.eq_a.shape[0] != self.eq_b.size:
            raise ValueError("equality rows and right-hand sides differ in number")

    @property
    def num_vars(self):
        return self.c.size

    def validate(self, tol=1e-10):
        for b, blk in enumerate(self.blocks):
            scale = max(1.0, float(np.max(np.abs(blk))) if blk.size else 1.0)
            defect = float(np.max(np.abs(blk - adjoint(blk)))) if blk.size else 0.0
            if defect > tol * scale:
                raise ValueError(f"block {b} has a non-Hermitian matrix (defect {defect:.2e})")

    def slack(self, y):
        y = np.asarray(y, dtype=float)
        return [blk[0] + np.tensordot(y, blk[1:], axes=1) for blk in self.blocks]

    def to_json(self):
        return {
            "num_vars": self.num_vars,
            "objective": [float(v) for v in self.c],
            "blocks": [[matrix_to_json(f) for f in blk] for blk in self.blocks],
            "equalities": [
                {"a": [float(v) for v in row], "b": float(rhs)}
                for row, rhs in zip(self.eq_a, self.eq_b)
            ],
        }

    @classmethod
    def from_json(cls, obj):
        c = np.array(obj["objective"], dtype=float)
        blocks = [np.array([matrix_from_json(f) for f in blk]) for blk in obj["blocks"]]
        eqs = obj.get("equalities", [])
        eq_a = np.array([e["a"] for e in eqs], dtype=float).reshape(-1, c.size)
        eq_b = np.array([e["b"] for e in eqs], dtype=float)
        return cls(c=c, blocks=blocks, eq_a=eq_a, eq_b=eq_b)


@dataclass
class SdpSolution:
    status: Status
    y: np.ndarray
    primal_objective: float
    dual_objective: float
    dual_matrices: list
    gap: float
    iterations: int = 0
    ray: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    def to_json(self):
        def num(v):
            v = float(v)
            return v if np.isfinite(v) else repr(v)

        return {
            "status": self.status.value,
            "y": [float(v) for v in self.y],
            "primal_objective": num(self.primal_objective),
            "dual_objective": num(self.dual_objective),
            "gap": num(self.gap),
            "iterations": self.iterations,
            "dual_matrices": [matrix_to_json(z) for z in self.dual_matrices],
            "ray": None if self.ray is None else [float(v) for v in self.ray],
            "diagnostics": {k: _jsonable(v) for k, v in sorted(self.diagnostics.items())},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iters: int = 200
    ratio_threshold: float = 1e6
    step_fraction: float = 0.98


def _inner(a, b):
    return float(np.vdot(a, b).real)


def _psd_step(x, dx, cho=None):
    """Largest alpha with ``x + alpha dx >= 0`` (``x`` positive definite)."""
    try:
        lower = cho if cho is not None else np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    w = sla.solve_triangular(lower, dx, lower=True)
    w = sla.solve_triangular(lower, adjoint(w), lower=True)
    lam = np.linalg.eigvalsh(herm_part(w))[0]
    return np.inf if lam >= 0 else -1.0 / lam


class _Embedding:
    """Homogeneous self-dual interior-point method on the standard pair

        min <C,X>  s.t.  <A_i,X> = b_i, X >= 0
        max b.y    s.t.  C - sum y_i A_i = S >= 0

    A solver instance owns its iterates and workspace and is used once.
    """

    def __init__(self, C, A, b, opts):
        self.C = C
        self.A = A
        self.b = b
        self.opts = opts
        self.m = b.size
        self.dims = [c.shape[0] for c in C]
        self.nu = sum(self.dims) + 1
        self.sparse = [SparseBlock(a) for a in A]
        self.flatA = [a.reshape(self.m, -1) for a in A]

    def amap(self, X):
        out = np.zeros(self.m)
        for fa, x in zip(self.flatA, X):
            out += (np.conj(fa) @ x.reshape(-1)).real
        return out

    def aadj(self, y):
        return [np.tensordot(y, a, axes=1) for a in self.A]

    def run(self):
        o = self.opts
        m = self.m
        C, b = self.C, self.b
        X = [np.eye(d, dtype=np.complex128) for d in self.dims]
        S = [np.eye(d, dtype=np.complex128) for d in self.dims]
        y = np.zeros(m)
        tau = kappa = 1.0
        normb = 1.0 + np.linalg.norm(b)
        normC = 1.0 + np.sqrt(sum(_inner(c, c) for c in C))
        history = {"status": None, "iterations": 0, "stall": False, "breakdown": None}
        small_steps = 0
        best = None
        for it in range(o.max_iters):
            history["iterations"] = it
            # residuals and termination
            AX = self.amap(X)
            ATy = self.aadj(y)
            Rp = b * tau - AX
            Rd = [c * tau - aty - s for c, aty, s in zip(C, ATy, S)]
            cx = sum(_inner(c, x) for c, x in zip(C, X))
            by = float(b @ y)
            Rg = cx - by + kappa
            mu = (sum(_inner(x, s) for x, s in zip(X, S)) + tau * kappa) / self.nu

            pres = np.linalg.norm(Rp) / tau / normb
            dres = np.sqrt(sum(_inner(r, r) for r in Rd)) / tau / normC
            pobj, dobj = cx / tau, by / tau
            gap = abs(pobj - dobj)
            rel_gap = gap / max(1.0, abs(pobj), abs(dobj))
            score = max(pres, dres, rel_gap / max(o.gap_tol, 1e-16) * o.feas_tol)
            if best is None or score < best[0]:
                best = (score, [x.copy() for x in X], y.copy(), [s.copy() for s in S], tau, kappa)
            if pres <= 0.1 * o.feas_tol and dres <= 0.1 * o.feas_tol and rel_gap <= 0.01 * o.gap_tol:
                history["status"] = "converged"
                break
            if kappa / tau > o.ratio_threshold or tau < 1e-10 * max(1.0, kappa):
                cert = self._infeasibility(X, y, S, tau)
                if cert is not None:
                    history["status"] = cert
                    break
            if mu < 1e-15 * max(1.0, tau) and it > 0:
                history["stall"] = True
                break

            # factorizations
            try:
                cholX = [np.linalg.cholesky(x) for x in X]
                cholS = [np.linalg.cholesky(s) for s in S]
            except np.linalg.LinAlgError:
                history["breakdown"] = "iterate lost positive definiteness"
                break
            Sinv = []
            for L in cholS:
                Li = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
                Sinv.append(adjoint(Li) @ Li)
            M = np.zeros((m, m))
            for a, sp, x, si in zip(self.A, self.sparse, X, Sinv):
                schur_block(a, sp, x, si, M)
            M = 0.5 * (M + M.T)
            try:
                factor = self._factor(M)
            except NumericalBreakdown as exc:
                history["breakdown"] = str(exc)
                break

            def H(Z):
                return [herm_part(x @ z @ si) for x, z, si in zip(X, Z, Sinv)]

            HC = H(C)
            g = self.amap(HC)
            hC = sum(_inner(c, h) for c, h in zip(C, HC))
            v2 = sla.cho_solve(factor, g + b)

            def direction(eta, Rc, rtk):
                HRd = H(Rd)
                T = [rc - eta * hr for rc, hr in zip(Rc, HRd)]
                r1 = eta * Rp - self.amap(T)
                v1 = sla.cho_solve(factor, r1)
                num = eta * Rg + sum(_inner(c, t) for c, t in zip(C, T)) + rtk / tau + (g - b) @ v1
                den = (b - g) @ v2 + hC + kappa / tau
                dtau = num / den
                dy = v1 + dtau * v2
                ATdy = self.aadj(dy)
                dS = [eta * rd + c * dtau - a for rd, c, a in zip(Rd, C, ATdy)]
                HdS = H(dS)
                dX = [rc - h for rc, h in zip(Rc, HdS)]
                dX = [herm_part(d) for d in dX]
                dkappa = (rtk - kappa * dtau) / tau
                return dX, dy, dS, dtau, dkappa

            def max_step(dX, dS, dtau, dkappa):
                alpha = np.inf
                for x, dx, L in zip(X, dX, cholX):
                    alpha = min(alpha, _psd_step(x, dx, L))
                for s, ds, L in zip(S, dS, cholS):
                    alpha = min(alpha, _psd_step(s, ds, L))
                if dtau < 0:
                    alpha = min(alpha, -tau / dtau)
                if dkappa < 0:
                    alpha = min(alpha, -kappa / dkappa)
                return alpha

            # predictor
            aff = direction(1.0, [-x for x in X], -tau * kappa)
            a_aff = min(1.0, max_step(aff[0], aff[2], aff[3], aff[4]))
            mu_aff = (sum(_inner(x + a_aff * dx, s + a_aff * ds)
                          for x, dx, s, ds in zip(X, aff[0], S, aff[2]))
                      + (tau + a_aff * aff[3]) * (kappa + a_aff * aff[4])) / self.nu
            sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
            # corrector
            Rc = [sigma * mu * si - x - herm_part(dx @ ds @ si)
                  for si, x, dx, ds in zip(Sinv, X, aff[0], aff[2])]
            rtk = sigma * mu - tau * kappa - aff[3] * aff[4]
            dX, dy, dS, dtau, dkappa = direction(1.0 - sigma, Rc, rtk)
            alpha = min(1.0, o.step_fraction * max_step(dX, dS, dtau, dkappa))
            if not np.isfinite(alpha) or alpha < 1e-10:
                small_steps += 1
                if small_steps >= 3:
                    history["stall"] = True
                    break
                alpha = max(alpha, 0.0) if np.isfinite(alpha) else 0.0
            else:
                small_steps = 0
            X = [herm_part(x + alpha * d) for x, d in zip(X, dX)]
            S = [herm_part(s + alpha * d) for s, d in zip(S, dS)]
            y = y + alpha * dy
            tau = tau + alpha * dtau
            kappa = kappa + alpha * dkappa
        else:
            history["iterations"] = o.max_iters
            history["stall"] = True

        if history["status"] is None:
            # fall back to the most accurate iterate seen
            _, X, y, S, tau, kappa = best
            cert = self._infeasibility(X, y, S, tau) if kappa / tau > 1.0 else None
            history["status"] = cert or "best"
        return X, y, S, tau, kappa, history

    def _factor(self, M):
        diag = np.diag(M)
        scale = max(float(np.max(np.abs(diag))) if diag.size else 1.0, 1e-300)
        for shift in (0.0, 1e-14, 1e-12, 1e-10):
            try:
                return sla.cho_factor(M + shift * scale * np.eye(M.shape[0]), lower=True)
            except (np.linalg.LinAlgError, ValueError):
                continue
        raise NumericalBreakdown("Schur complement is not positive definite")

    def _infeasibility(self, X, y, S, tau):
        """Return 'primal_cert' / 'dual_cert' when an approximate certificate is valid."""
        tol = self.opts.feas_tol
        cx = sum(_inner(c, x) for c, x in zip(self.C, X))
        if cx < 0:
            Z = [x / -cx for x in X]
            if np.linalg.norm(self.amap(Z)) <= tol:
                return "primal_cert"
        by = float(self.b @ y)
        if by > 0:
            d = y / by
            ATd = self.aadj(d)
            if min(np.linalg.eigvalsh(herm_part(-a))[0] for a in ATd) >= -tol:
                return "dual_cert"
        return None


def _row_space(phi):
    """Left singular vectors and values of a wide matrix, largest first.

    The Gram matrix is diagonalized when the kept spectrum is well conditioned;
    otherwise a full SVD is used.
    """
    w, v = np.linalg.eigh(phi @ phi.T)
    w, v = w[::-1], v[:, ::-1]
    s = np.sqrt(np.clip(w, 0.0, None))
    if s.size and s[0] > 0:
        kept = s[s > 1e-6 * s[0]]
        gap = s[kept.size] / s[0] if kept.size < s.size else 0.0
        if gap < 1e-10 and kept[-1] > 1e-4 * s[0]:
            s[kept.size:] = 0.0
            return v, s
    u, s, _ = np.linalg.svd(phi, full_matrices=False)
    return u, s


def _rank_cut(s, rel=1e-12):
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel * s[0]))


def _reduced_solution(problem, opts, status, y, Z, ray=None, iterations=0, diag=None):
    """Fill objectives and gap for a user-level solution."""
    pobj = float(problem.c @ y) if y is not None else np.nan
    dobj = np.nan
    if Z is not None:
        g = np.array([sum(_inner(blk[i + 1], z) for blk, z in zip(problem.blocks, Z))
                      for i in range(problem.num_vars)])
        f0 = sum(_inner(blk[0], z) for blk, z in zip(problem.blocks, Z))
        # equality multipliers fit the dual residual g - c in the row space of eq_a
        if problem.eq_a.shape[0]:
            lam = np.linalg.lstsq(problem.eq_a.T, g - problem.c, rcond=None)[0]
            dobj = -f0 - float(problem.eq_b @ lam)
        else:
            dobj = -f0
    gap = pobj - dobj if np.isfinite(pobj) and np.isfinite(dobj) else np.inf
    return SdpSolution(status=status, y=y, primal_objective=pobj, dual_objective=dobj,
                       dual_matrices=Z, gap=float(gap), iterations=iterations, ray=ray,
                       diagnostics=diag or {})


def solve(problem, gap_tol=1e-8, feas_tol=1e-8, max_iters=200):
    """Solve an :class:`SdpProblem`. Deterministic for fixed inputs and options.

    ``Optimal`` is only returned after the final point is re-verified on the
    original data: every block slack has minimum eigenvalue ``>= -feas_tol``,
    the dual residual is within ``feas_tol`` and the duality gap is within
    ``gap_tol * max(1, |objective|)``.
    """
    opts = SolverOptions(gap_tol=gap_tol, feas_tol=feas_tol, max_iters=max_iters)
    p = problem
    m = p.num_vars
    zeros_Z = [np.zeros_like(blk[0]) for blk in p.blocks]

    # equality elimination: y = y0 + N w
    if p.eq_a.shape[0]:
        u, s, vt = np.linalg.svd(p.eq_a)
        r = _rank_cut(s)
        y0 = np.linalg.lstsq(p.eq_a, p.eq_b, rcond=None)[0]
        res = np.linalg.norm(p.eq_a @ y0 - p.eq_b)
        if res > 1e-9 * (1.0 + np.linalg.norm(p.eq_b)):
            return SdpSolution(Status.PRIMAL_INFEASIBLE, np.zeros(m), np.nan, np.nan,
                               zeros_Z, np.inf,
                               diagnostics={"reason": "inconsistent equalities",
                                            "equality_residual": float(res)})
        N = vt[r:].T
    else:
        y0 = np.zeros(m)
        N = np.eye(m)
    F0 = [blk[0] + np.tensordot(y0, blk[1:], axes=1) for blk in p.blocks]
    Fw = [np.tensordot(N.T, blk[1:], axes=1) for blk in p.blocks]
    cw = N.T @ p.c
    mw = N.shape[1]

    # drop directions that leave every constraint matrix unchanged
    if mw:
        phi = np.concatenate([np.stack([hvec(f) for f in fb]) for fb in Fw], axis=1) \
            if Fw else np.zeros((mw, 0))
        u, s = _row_space(phi)
        r2 = _rank_cut(s)
    else:
        u, s, r2 = np.zeros((0, 0)), np.zeros(0), 0
    R = u[:, :r2]
    c_null = cw - R @ (R.T @ cw)
    if mw and np.linalg.norm(c_null) > 1e-10 * (1.0 + np.linalg.norm(cw)):
        feas = solve(SdpProblem(np.zeros(m), p.blocks, p.eq_a, p.eq_b),
                     gap_tol, feas_tol, max_iters)
        if feas.status is Status.OPTIMAL:
            ray = -(N @ c_null)
            return SdpSolution(Status.DUAL_INFEASIBLE, feas.y, -np.inf, np.nan, zeros_Z,
                               np.inf, iterations=feas.iterations, ray=ray,
                               diagnostics={"reason": "objective along a null direction"})
        return feas

    if r2 == 0:
        lams = [np.linalg.eigvalsh(f)[0] if f.size else np.inf for f in F0]
        worst = int(np.argmin(lams)) if lams else 0
        if not lams or lams[worst] >= -feas_tol:
            return _reduced_solution(p, opts, Status.OPTIMAL, y0, zeros_Z,
                                     diag={"reason": "no free variables"})
        w, v = np.linalg.eigh(F0[worst])
        vec = v[:, 0]
        Z = [np.zeros_like(f) for f in F0]
        Z[worst] = np.outer(vec, vec.conj()) / -w[0]
        return _reduced_solution(p, opts, Status.PRIMAL_INFEASIBLE, y0, Z,
                                 diag={"reason": "no free variables"})

    # orthonormal constraint directions: w = R diag(1/s) z
    T = R / s[:r2]
    A = [-np.tensordot(T.T, fb, axes=1) for fb in Fw]
    b = -(T.T @ cw)
    sC = 1.0 + np.sqrt(sum(_inner(f, f) for f in F0))
    sb = 1.0 + np.linalg.norm(b)
    emb = _Embedding([f / sC for f in F0], A, b / sb, opts)
    X, ys, S, tau, kappa, hist = emb.run()

    diag = {"tau": tau, "kappa": kappa, "exit": hist["status"],
            "stall": hist["stall"], "reduced_vars": r2}
    if hist["breakdown"]:
        diag["breakdown"] = hist["breakdown"]
    iters = hist["iterations"]

    if hist["status"] == "primal_cert":
        cx = sum(_inner(f, x) for f, x in zip(F0, X))
        Z = [herm_part(x) / -cx for x in X]
        sol = _reduced_solution(p, opts, Status.PRIMAL_INFEASIBLE, y0, Z,
                                iterations=iters, diag=diag)
        return sol
    if hist["status"] == "dual_cert":
        z = ys * sC / (b @ ys)
        ray = N @ (T @ z)
        ray = ray / max(1e-300, -float(p.c @ ray))
        return SdpSolution(Status.DUAL_INFEASIBLE, y0, -np.inf, np.nan, zeros_Z, np.inf,
                           iterations=iters, ray=ray, diagnostics=diag)

    z = ys * sC / tau
    y = y0 + N @ (T @ z)
    Z = [herm_part(x) * sb / tau for x in X]
    sol = _reduced_solution(p, opts, Status.OPTIMAL, y, Z, iterations=iters, diag=diag)
    report = check_certificate(p, sol, feas_tol=feas_tol, gap_tol=gap_tol)
    if not report["ok"]:
        sol.status = Status.INDETERMINATE
        sol.diagnostics["rejected"] = report["worst"]
    return sol


def solve_tolerant(problem, gap_tol=1e-9, loosest=1e-7, feas_tol=1e-8):
    """:func:`solve`, retried with a tenfold looser gap tolerance up to ``loosest``
    when the tight run ends ``Indeterminate``."""
    tol = gap_tol
    while True:
        sol = solve(problem, gap_tol=tol, feas_tol=feas_tol)
        if sol.status is not Status.INDETERMINATE or tol >= loosest:
            return sol
        tol = min(loosest, tol * 10.0)


def check_certificate(problem, solution, feas_tol=1e-8, gap_tol=1e-8):
    """Re-verify a solution by direct eigenvalue computations on the original data.

    Returns a report with one entry per check (``name``, ``value``,
    ``tolerance``, ``verdict``), the per-block minimum eigenvalues and an
    overall ``ok`` flag. ``Indeterminate`` solutions carry no claims and are
    reported ``ok``.
    """
    p, s = problem, solution
    checks = []
    blocks = []

    def add(name, value, tol, verdict):
        checks.append({"name": name, "value": float(value), "tolerance": float(tol),
                       "verdict": bool(verdict)})

    if s.status is Status.OPTIMAL:
        slack = p.slack(s.y)
        for b, (sl, z) in enumerate(zip(slack, s.dual_matrices)):
            ls = float(np.linalg.eigvalsh(herm_part(sl))[0]) if sl.size else 0.0
            lz = float(np.linalg.eigvalsh(herm_part(z))[0]) if z.size else 0.0
            blocks.append({"block": b, "slack_min_eig": ls, "dual_min_eig": lz})
            add(f"slack_psd[{b}]", -ls, feas_tol, ls >= -feas_tol)
            add(f"dual_psd[{b}]", -lz, feas_tol, lz >= -feas_tol)
        g = np.array([sum(_inner(blk[i + 1], z) for blk, z in zip(p.blocks, s.dual_matrices))
                      for i in range(p.num_vars)])
        resid = g - p.c
        if p.eq_a.shape[0]:
            lam = np.linalg.lstsq(p.eq_a.T, resid, rcond=None)[0]
            resid = resid - p.eq_a.T @ lam
            eq_res = float(np.max(np.abs(p.eq_a @ s.y - p.eq_b)))
            add("equality_residual", eq_res, feas_tol, eq_res <= feas_tol)
        dres = float(np.max(np.abs(resid))) if resid.size else 0.0
        dtol = feas_tol * (1.0 + float(np.max(np.abs(p.c), initial=0.0)))
        add("dual_residual", dres, dtol, dres <= dtol)
        gtol = gap_tol * max(1.0, abs(s.primal_objective))
        add("gap", abs(s.gap), gtol, abs(s.gap) <= gtol)
        add("weak_duality", s.dual_objective - s.primal_objective, gtol,
            s.primal_objective >= s.dual_objective - gtol)
    elif s.status is Status.PRIMAL_INFEASIBLE and s.dual_matrices is not None \
            and any(np.any(z) for z in s.dual_matrices):
        Z = s.dual_matrices
        for b, z in enumerate(Z):
            lz = float(np.linalg.eigvalsh(herm_part(z))[0]) if z.size else 0.0
            blocks.append({"block": b, "dual_min_eig": lz})
            add(f"farkas_psd[{b}]", -lz, feas_tol, lz >= -feas_tol)
        g = np.array([sum(_inner(blk[i + 1], z) for blk, z in zip(p.blocks, Z))
                      for i in range(p.num_vars)])
        f0 = sum(_inner(blk[0], z) for blk, z in zip(p.blocks, Z))
        if p.eq_a.shape[0]:
            lam = np.linalg.lstsq(p.eq_a.T, g, rcond=None)[0]
            f0 = f0 + float(p.eq_b @ lam)
            g = g - p.eq_a.T @ lam
        res = float(np.max(np.abs(g))) if g.size else 0.0
        add("farkas_orthogonality", res, feas_tol, res <= feas_tol)
        add("farkas_value", f0, 0.0, f0 < 0)
    elif s.status is Status.PRIMAL_INFEASIBLE:
        add("inconsistent_equalities", s.diagnostics.get("equality_residual", np.inf), 0.0,
            s.diagnostics.get("reason") == "inconsistent equalities")
    elif s.status is Status.DUAL_INFEASIBLE:
        ray = s.ray
        for b, blk in enumerate(p.blocks):
            direc = np.tensordot(ray, blk[1:], axes=1)
            ld = float(np.linalg.eigvalsh(herm_part(direc))[0]) if direc.size else 0.0
            blocks.append({"block": b, "ray_min_eig": ld})
            add(f"ray_psd[{b}]", -ld, feas_tol, ld >= -feas_tol)
        add("ray_descent", float(p.c @ ray), 0.0, float(p.c @ ray) < 0)
        if p.eq_a.shape[0]:
            er = float(np.max(np.abs(p.eq_a @ ray)))
            add("ray_equality", er, feas_tol, er <= feas_tol)
    worst = max(checks, key=lambda c: (not c["verdict"], c["value"] - c["tolerance"]),
                default=None)
    return {"status": s.status.value, "checks": checks, "blocks": blocks,
            "ok": all(c["verdict"] for c in checks), "worst": worst}


class LmiBlock:
    """One PSD constraint ``const + sum_i y_i F_i >= 0`` under construction."""

    def __init__(self, dim):
        self.dim = dim
        self.const = np.zeros((dim, dim), dtype=np.complex128)
        self.terms = []

    def add_const(self, mat, row=0, col=0):
        mat = np.asarray(mat, dtype=np.complex128)
        h, w = mat.shape
        self.const[row:row + h, col:col + w] += mat
        if row != col:
            self.const[col:col + w, row:row + h] += adjoint(mat)

    def add(self, idx, mats, row=0, col=0):
        """Add ``sum_t y[idx[t]] * mats[t]`` at offset ``(row, col)``.

        Off-diagonal placements (``row != col``) are mirrored by their adjoint
        so the block stays Hermitian.
        """
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        mats = np.asarray(mats, dtype=np.complex128).reshape(len(idx), *np.shape(mats)[-2:])
        self.terms.append((idx, mats, row, col))


class SdpBuilder:
    """Incremental construction of an :class:`SdpProblem` from named pieces."""

    def __init__(self):
        self.num_vars = 0
        self._obj = []
        self._blocks = []
        self._eqs = []

    def variables(self, count):
        idx = np.arange(self.num_vars, self.num_vars + count)
        self.num_vars += count
        return idx

    def minimize(self, idx, coefs):
        self._obj.append((np.atleast_1d(idx), np.atleast_1d(np.asarray(coefs, dtype=float))))

    def maximize(self, idx, coefs):
        self.minimize(idx, -np.asarray(coefs, dtype=float))

    def block(self, dim):
        blk = LmiBlock(dim)
        blk.index = len(self._blocks)
        self._blocks.append(blk)
        return blk

    def equality(self, idx, coefs, rhs):
        self._eqs.append((np.atleast_1d(idx), np.atleast_1d(np.asarray(coefs, dtype=float)),
                          float(rhs)))

    def build(self):
        m = self.num_vars
        c = np.zeros(m)
        for idx, coefs in self._obj:
            np.add.at(c, idx, coefs)
        blocks = []
        for blk in self._blocks:
            F = np.zeros((m + 1, blk.dim, blk.dim), dtype=np.complex128)
            F[0] = blk.const
            for idx, mats, row, col in blk.terms:
                h, w = mats.shape[1:]
                np.add.at(F, (1 + idx, slice(row, row + h), slice(col, col + w)), mats)
                if row != col:
                    np.add.at(F, (1 + idx, slice(col, col + w), slice(row, row + h)),
                              adjoint(mats))
            blocks.append(F)
        eq_a = np.zeros((len(self._eqs), m))
        eq_b = np.zeros(len(self._eqs))
        for r, (idx, coefs, rhs) in enumerate(self._eqs):
            np.add.at(eq_a[r], idx, coefs)
            eq_b[r] = rhs
        return SdpProblem(c=c, blocks=blocks, eq_a=eq_a, eq_b=eq_b)
