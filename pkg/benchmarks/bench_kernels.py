"""Compare the numba kernels with their numpy fallbacks.

Run ``python3 benchmarks/bench_kernels.py``. The Schur and Gram-Schmidt kernels
are timed directly; the end-to-end solve runs in two subprocesses, one with
``OPSYS_DISABLE_NUMBA=1``.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from opsys import NUMBA_ENABLED, band_system, full_system
from opsys.kernels import SparseBlock, _mgs_kernel, _mgs_numpy, schur_dense, schur_sparse
from opsys.linalg import random_hermitian

END_TO_END = """
import time, numpy as np
from opsys import band_system, dual_system, dual_norm, random_functional
S = band_system(4, 1)
D = dual_system(S, verify=False)
rng = np.random.default_rng(0)
fs = [random_functional(S, rng, 2) for _ in range(3)]
dual_norm(D, fs[0])
t = time.perf_counter()
for f in fs:
    dual_norm(D, f)
print(time.perf_counter() - t)
"""


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def schur_case(S, n, rng):
    """Constraint matrices ``kron(E_a, b_j)`` of a level-``n`` block, as the solver sees them."""
    mats = S.level_basis(n)
    d = mats.shape[1]
    X = random_hermitian(rng, d)
    X = X @ X + np.eye(d)
    Sinv = random_hermitian(rng, d)
    Sinv = Sinv @ Sinv + np.eye(d)
    return mats, X, Sinv


def bench_schur(repeat):
    rng = np.random.default_rng(1)
    rows = []
    for S, n in ((band_system(4, 1), 2), (band_system(4, 1), 3), (full_system(3), 3)):
        mats, X, Sinv = schur_case(S, n, rng)
        block = SparseBlock(mats)
        m = len(mats)
        Ms, Md = np.zeros((m, m)), np.zeros((m, m))
        schur_sparse(block, X, Sinv, Ms)
        schur_dense(mats, X, Sinv, Md)
        dev = float(np.max(np.abs(Ms - Md)) / max(1.0, np.max(np.abs(Md))))
        ts = best_of(lambda: schur_sparse(block, X, Sinv, np.zeros((m, m))), repeat)
        td = best_of(lambda: schur_dense(mats, X, Sinv, np.zeros((m, m))), repeat)
        rows.append({"kernel": "schur", "case": f"{S.name} level {n}", "vars": m,
                     "block": mats.shape[1], "density": round(block.density, 4),
                     "numba_s": ts, "numpy_s": td, "rel_dev": dev})
    return rows


def bench_mgs(repeat):
    rng = np.random.default_rng(2)
    rows = []
    for n, d in ((40, 64), (120, 256), (300, 512)):
        V = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        tol = 1e-10 * float(np.max(np.linalg.norm(V, axis=1)))
        q1, q2 = _mgs_kernel(V, tol), _mgs_numpy(V, tol)
        dev = float(np.max(np.abs(q1 - q2)))
        t1 = best_of(lambda: _mgs_kernel(V, tol), repeat)
        t2 = best_of(lambda: _mgs_numpy(V, tol), repeat)
        rows.append({"kernel": "mgs", "case": f"{n} x {d}", "numba_s": t1, "numpy_s": t2,
                     "rel_dev": dev})
    return rows


def bench_end_to_end():
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, OPSYS_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True,
                             capture_output=True, text=True)
        out[label] = float(res.stdout.strip().splitlines()[-1])
    return {"kernel": "dual_norm x3", "case": "band(4,1) level 2",
            "numba_s": out["numba"], "numpy_s": out["numpy"], "rel_dev": None}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows to this file")
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if not NUMBA_ENABLED:
        sys.exit("numba is disabled in this process; unset OPSYS_DISABLE_NUMBA")
    rows = bench_schur(args.repeat) + bench_mgs(args.repeat)
    if not args.skip_end_to_end:
        rows.append(bench_end_to_end())
    print(f"{'kernel':<14}{'case':<24}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>9}"
          f"{'rel dev':>11}")
    for r in rows:
        dev = "-" if r["rel_dev"] is None else f"{r['rel_dev']:.1e}"
        print(f"{r['kernel']:<14}{r['case']:<24}{r['numba_s']:>12.5f}{r['numpy_s']:>12.5f}"
              f"{r['numpy_s'] / r['numba_s']:>9.2f}{dev:>11}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
