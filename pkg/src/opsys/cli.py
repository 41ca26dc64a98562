"""Command line entry point ``opsys``.

Every verb prints (or writes with ``-o``) one JSON report carrying the schema
tag and the seed. Exit status: 0 when every verdict passes, 2 when some
verdict fails, 1 on usage or input errors.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .duality import (
    dual_norm,
    dual_system,
    double_dual_compare,
    functor_dual_map,
    verify_theorem_suite,
)
from .errors import OpsysError
from .linalg import matrix_from_json, matrix_to_json
from .maps import LevelFunctional, cb_norm, gamma_norm, is_completely_positive, norm_r
from .reports import SCHEMA, all_pass, check, dumps, number, write_atomic
from .sdp import SdpProblem, check_certificate, solve
from .system import (
    cone_membership,
    decomposition_constants,
    find_order_unit,
    is_generating,
    random_element,
)
from .zoo import (
    band_system,
    diagzero_system,
    direct_sum,
    full_system,
    load_map,
    load_metric_csv,
    load_system,
    tolerance_system,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_element(S, path):
    """Level element from ``{"level": n, "matrix": {...}}`` or a bare matrix object."""
    obj = _load_json(path)
    mat = matrix_from_json(obj["matrix"] if "matrix" in obj else obj)
    level = int(obj.get("level", mat.shape[0] // S.k))
    return S.element(mat, level)


def load_functional(S, path):
    """Functional from ``{"level": n, "values": [[re, im], ...]}`` (row-major ``(n, n, d)``)."""
    obj = _load_json(path)
    n = int(obj["level"])
    pairs = np.asarray(obj["values"], dtype=float).reshape(n, n, S.dim, 2)
    return LevelFunctional(S, pairs[..., 0] + 1j * pairs[..., 1])


# verbs ------------------------------------------------------------------------------

def _zoo(args):
    if args.kind == "full":
        S = full_system(args.size)
    elif args.kind == "diagzero":
        S = diagzero_system(args.size)
    elif args.kind == "band":
        S = band_system(args.size, args.bandwidth)
    elif args.kind == "tolerance":
        S = tolerance_system(load_metric_csv(args.metric), args.eps, args.inclusive)
    else:
        S = direct_sum(load_system(args.first), load_system(args.second))
    gen = is_generating(S)
    return {"system": S.to_json(), "dim": S.dim, "ambient_dim": S.k,
            "checks": [check("is_generating", gen.defect, True, generating=gen.generating),
                       check("unital", float(S.is_unital()), True)]}


def _sdp(args):
    problem = SdpProblem.from_json(_load_json(args.problem))
    problem.validate()
    sol = solve(problem, gap_tol=args.gap_tol, feas_tol=args.feas_tol, max_iters=args.max_iters)
    cert = check_certificate(problem, sol, feas_tol=args.feas_tol, gap_tol=args.gap_tol)
    determined = sol.status.value != "Indeterminate"
    return {"solution": sol.to_json(), "certificate": cert,
            "checks": [check("certificate", float(not cert["ok"]), cert["ok"]),
                       check("determined", float(not determined), determined,
                             status=sol.status.value)]}


def _sys(args, rng):
    S = load_system(args.system)
    if args.action == "member":
        x = load_element(S, args.element)
        mem = cone_membership(S, x, args.feas_tol)
        return {"in_cone": mem.in_cone, "min_eig": number(mem.min_eigenvalue), "checks": []}
    gen = is_generating(S)
    face = S.face()
    unit = find_order_unit(S)
    dc = decomposition_constants(S, list(range(1, args.levels + 1)), args.samples, rng)
    return {"system": S.name, "dim": S.dim, "ambient_dim": S.k, "unital": S.is_unital(),
            "generating": gen.generating, "face_rank": face.rank,
            "order_unit": None if unit is None else matrix_to_json(unit.matrix),
            "decomposition_constants": dc,
            "checks": [check("face_certificate", face.certificate, face.certificate <= 1e-7,
                             tolerance=1e-7)]}


def _map(args):
    phi = load_map(args.map)
    if args.action == "cp":
        res = is_completely_positive(phi)
        return {"cp": res.cp, "cone_minimum": number(res.value),
                "trivial_cone": res.trivial_cone,
                "witness": None if res.witness is None else matrix_to_json(res.witness.matrix),
                "checks": []}
    if args.action == "cb":
        res = cb_norm(phi)
        gap = res.upper - res.lower
        return {"cb_norm": res.value, "upper": res.upper, "lower": res.lower,
                "checks": [check("bound_gap", gap, gap <= 1e-4 * max(1.0, res.upper),
                                 tolerance=1e-4)]}
    pd, report = functor_dual_map(phi, samples=args.samples)
    return {"dual_matrix": matrix_to_json(pd.matrix), **report}


def _norm(args):
    S = load_system(args.system)
    if args.kind == "dual":
        f = load_functional(S, args.element)
        return {"dual_norm": dual_norm(dual_system(S, verify=False), f), "checks": []}
    x = load_element(S, args.element)
    if args.kind == "op":
        return {"norm": x.norm(), "checks": []}
    if args.kind == "r":
        value = norm_r(S, x).value
        dev = abs(value - x.norm())
        return {"norm_r": value, "norm": x.norm(),
                "checks": [check("regularized_equals_norm", dev, dev <= 1e-6, tolerance=1e-6)]}
    res = gamma_norm(S, x)
    n = x.level
    ok = x.norm() - 1e-6 <= res.value <= n * x.norm() + 1e-6
    return {"gamma": res.value, "upper": res.upper, "lower": res.lower, "norm": x.norm(),
            "checks": [check("gamma_sandwich", res.value, ok, bound=n * x.norm(),
                             tolerance=1e-6)]}


def _dual(args, rng):
    S = load_system(args.system)
    if args.action == "build":
        D = dual_system(S)
        return {"dual": D.to_json(), "checks": list(D.checks)}
    levels = tuple(range(1, args.levels + 1))
    return double_dual_compare(S, levels, args.samples, rng)


def _verify(args, rng):
    S = load_system(args.system)
    levels = tuple(range(1, args.levels + 1))
    out = {"system": S.name}
    if args.suite in ("all", "theorems"):
        out["theorems"] = verify_theorem_suite(S, levels[:2], args.samples, rng)
    if args.suite in ("all", "norms"):
        entries = []
        for n in levels:
            worst = 0.0
            for _ in range(args.samples):
                x = random_element(S, rng, n, selfadjoint=False)
                worst = max(worst, abs(norm_r(S, x).value - x.norm()))
            entries.append(check("regularized_equals_norm", worst, worst <= 1e-6,
                                 tolerance=1e-6, level=n))
        out["norms"] = entries
    if args.suite in ("all", "bidual"):
        if is_generating(S).generating:
            out["bidual"] = double_dual_compare(S, levels, args.samples, rng)
        else:
            out["bidual"] = {"skipped": "cone is not generating"}
    return out


# parser -------------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="opsys", description="Operator systems, their duals and norms.")
    p.add_argument("--version", action="version", version=f"opsys {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--feas-tol", type=float, default=1e-8)
    common.add_argument("--gap-tol", type=float, default=1e-8)
    verbs = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    z = verbs.add_parser("zoo", help="construct example systems")
    zk = z.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in ("full", "diagzero"):
        q = zk.add_parser(kind, parents=[common])
        q.add_argument("size", type=int)
    q = zk.add_parser("band", parents=[common])
    q.add_argument("size", type=int)
    q.add_argument("bandwidth", type=int)
    q = zk.add_parser("tolerance", parents=[common])
    q.add_argument("metric")
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--inclusive", action="store_true", help="relate points with dist <= eps")
    q = zk.add_parser("sum", parents=[common])
    q.add_argument("first")
    q.add_argument("second")

    s = verbs.add_parser("sdp", help="semidefinite programs")
    sk = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = sk.add_parser("solve", parents=[common])
    q.add_argument("problem")
    q.add_argument("--max-iters", type=int, default=200)

    y = verbs.add_parser("sys", help="inspect a system")
    yk = y.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = yk.add_parser("info", parents=[common])
    q.add_argument("system")
    q.add_argument("--levels", type=int, default=2)
    q.add_argument("--samples", type=int, default=4)
    q = yk.add_parser("member", parents=[common])
    q.add_argument("system")
    q.add_argument("element")

    m = verbs.add_parser("map", help="maps out of a system")
    mk = m.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for action in ("cp", "cb", "dual"):
        q = mk.add_parser(action, parents=[common])
        q.add_argument("map")
        q.add_argument("--samples", type=int, default=2)

    n = verbs.add_parser("norm", help="norms of elements and functionals")
    nk = n.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind in ("op", "r", "gamma", "dual"):
        q = nk.add_parser(kind, parents=[common])
        q.add_argument("system")
        q.add_argument("element", help="element JSON (functional JSON for 'dual')")

    d = verbs.add_parser("dual", help="dual systems")
    dk = d.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = dk.add_parser("build", parents=[common])
    q.add_argument("system")
    q = dk.add_parser("compare", parents=[common])
    q.add_argument("system")
    q.add_argument("--levels", type=int, default=3)
    q.add_argument("--samples", type=int, default=4)

    v = verbs.add_parser("verify", help="verification suites")
    vk = v.add_subparsers(dest="suite", required=True, parser_class=_Parser)
    for suite in ("all", "theorems", "norms", "bidual"):
        q = vk.add_parser(suite, parents=[common])
        q.add_argument("system")
        q.add_argument("--levels", type=int, default=3)
        q.add_argument("--samples", type=int, default=3)
    return p


def run(argv=None):
    """Run the CLI and return ``(exit_code, report)``; ``report`` is ``None`` on errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1, None
    rng = np.random.default_rng(args.seed)
    handlers = {
        "zoo": lambda: _zoo(args),
        "sdp": lambda: _sdp(args),
        "sys": lambda: _sys(args, rng),
        "map": lambda: _map(args),
        "norm": lambda: _norm(args),
        "dual": lambda: _dual(args, rng),
        "verify": lambda: _verify(args, rng),
    }
    try:
        result = handlers[args.verb]()
    except (OSError, ValueError, KeyError, OpsysError) as exc:
        print(f"opsys: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1, None
    command = [args.verb] + [getattr(args, a) for a in ("kind", "action", "suite")
                             if isinstance(getattr(args, a, None), str)]
    report = {"schema": SCHEMA, "command": " ".join(command), "seed": args.seed,
              "rng": "numpy.PCG64", "result": result}
    report["pass"] = all_pass(result)
    text = dumps(report)
    try:
        if args.output:
            write_atomic(args.output, text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"opsys: error: {exc}", file=sys.stderr)
        return 1, None
    return (0 if report["pass"] else 2), report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
