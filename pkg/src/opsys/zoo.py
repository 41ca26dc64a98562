"""Example operator systems, finite metric spaces and file formats."""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricMatrix, ParseError
from .maps import SystemMap
from .reports import write_atomic
from .system import OperatorSystem, make_system


def pattern_system(mask, name=None):
    """All matrices supported on the True entries of a self-adjoint boolean ``mask``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1] or mask.shape[0] < 1:
        raise ValueError("mask must be a non-empty square matrix")
    if not np.array_equal(mask, mask.T):
        raise AsymmetricMatrix("support pattern is not symmetric")
    k = mask.shape[0]
    rows, cols = np.nonzero(mask)
    units = np.zeros((len(rows), k, k), dtype=np.complex128)
    units[np.arange(len(rows)), rows, cols] = 1.0
    return make_system(units, name=name)


def full_system(k):
    """``M_k``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return pattern_system(np.ones((k, k), dtype=bool), name=f"full({k})")


def diagzero_system(k):
    """Matrices in ``M_k`` with zero diagonal; its matrix cones are all ``{0}``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    return pattern_system(~np.eye(k, dtype=bool), name=f"diagzero({k})")


def band_system(N, b):
    """Matrices in ``M_N`` vanishing off the band ``|i - j| <= b``."""
    if N < 1 or not 0 <= b < N:
        raise ValueError("need N >= 1 and 0 <= b < N")
    idx = np.arange(N)
    return pattern_system(np.abs(idx[:, None] - idx[None, :]) <= b, name=f"band({N},{b})")


def direct_sum(S, T):
    """Block-diagonal ``S ⊕ T`` inside ``M_{k_S + k_T}``."""
    k = S.k + T.k
    mats = np.zeros((S.dim + T.dim, k, k), dtype=np.complex128)
    mats[:S.dim, :S.k, :S.k] = S.basis
    mats[S.dim:, S.k:, S.k:] = T.basis
    name = f"{S.name}+{T.name}" if S.name and T.name else None
    return make_system(mats, name=name)


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Labelled points with a symmetric nonnegative distance matrix and zero diagonal.

    The triangle inequality is not required; a violation only warns.
    """

    points: tuple
    dist: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        object.__setattr__(self, "dist", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if len(self.points) != d.shape[0]:
            raise ValueError("one label per point is required")
        if not np.array_equal(d, d.T):
            i, j = np.argwhere(d != d.T)[0]
            raise AsymmetricMatrix(f"dist[{i},{j}] = {d[i, j]!r} but dist[{j},{i}] = {d[j, i]!r}")
        if np.any(np.diag(d) != 0) or np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("distances must be finite, nonnegative, with zero diagonal")
        viol = self.triangle_violation()
        if viol > 1e-10:
            warnings.warn(f"distance matrix violates the triangle inequality by {viol:.3g}",
                          stacklevel=3)

    @classmethod
    def from_coords(cls, coords, points=None):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        points = tuple(points) if points is not None else tuple(range(len(coords)))
        return cls(points, dist)

    @property
    def size(self):
        return self.dist.shape[0]

    def diameter(self):
        return float(self.dist.max(initial=0.0))

    def triangle_violation(self):
        d = self.dist
        if d.shape[0] == 0:
            return 0.0
        via = np.min(d[:, :, None] + d[None, :, :], axis=1)
        return float(np.max(d - via, initial=0.0))


@dataclass(frozen=True)
class ToleranceRelation:
    """Reflexive symmetric relation stored as a boolean adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=bool)
        object.__setattr__(self, "adjacency", a)
        if not np.all(np.diag(a)):
            raise ValueError("tolerance relation must be reflexive")
        if not np.array_equal(a, a.T):
            raise AsymmetricMatrix("tolerance relation must be symmetric")

    @classmethod
    def from_metric(cls, m, eps, inclusive=False):
        if eps <= 0:
            raise ValueError("eps must be positive")
        return cls(m.dist <= eps if inclusive else m.dist < eps)


def tolerance_system(m, eps, inclusive=False):
    """Matrices supported on ``{(i, j) : dist(i, j) < eps}`` (``<=`` with ``inclusive``)."""
    rel = ToleranceRelation.from_metric(m, eps, inclusive)
    op = "<=" if inclusive else "<"
    return pattern_system(rel.adjacency, name=f"tolerance(d{op}{eps!r})")


# files ----------------------------------------------------------------------

def _parse_row(row, lineno):
    out = []
    for col, cell in enumerate(row, start=1):
        try:
            out.append(float(cell))
        except ValueError:
            raise ParseError(f"not a number: {cell.strip()!r}", lineno, col) from None
    return out


def load_metric_csv(path):
    """Read a metric space from CSV.

    The first non-empty row is ``coords`` (one point per row, Euclidean
    distances) or ``dist`` (a full distance matrix).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)
                if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file", 1)
    lineno, header = rows[0]
    kind = header[0].strip().lower()
    if kind not in ("coords", "dist"):
        raise ParseError(f"header must be 'coords' or 'dist', got {header[0].strip()!r}", lineno, 1)
    data = [(i, _parse_row(r, i)) for i, r in rows[1:]]
    if not data:
        raise ParseError("no data rows", lineno + 1)
    width = len(data[0][1])
    for i, vals in data:
        if len(vals) != width:
            raise ParseError(f"row has {len(vals)} entries, expected {width}", i, len(vals))
    arr = np.array([v for _, v in data])
    if kind == "coords":
        return FiniteMetricSpace.from_coords(arr)
    if arr.shape[0] != arr.shape[1]:
        raise ParseError(f"distance matrix has {arr.shape[0]} rows and {arr.shape[1]} columns",
                         data[-1][0])
    return FiniteMetricSpace(tuple(range(arr.shape[0])), arr)


def save_metric_csv(m, path):
    lines = ["dist"] + [",".join(repr(float(x)) for x in row) for row in m.dist]
    write_atomic(path, "\n".join(lines) + "\n")


def save_system(S, path):
    write_atomic(path, json.dumps(S.to_json(), indent=2) + "\n")


def load_system(path):
    """Read a system JSON file, or the system inside a ``zoo`` report."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if "result" in obj and "system" in obj["result"]:
        obj = obj["result"]["system"]
    return OperatorSystem.from_json(obj)


def save_map(phi, path):
    write_atomic(path, json.dumps(phi.to_json(), indent=2) + "\n")


def load_map(path):
    with open(path, encoding="utf-8") as fh:
        return SystemMap.from_json(json.load(fh))


def random_metric_space(rng, size, dim=2):
    """Uniform random points in the unit cube."""
    return FiniteMetricSpace.from_coords(rng.random((size, dim)))


def standard_zoo(seed=0):
    """Named zoo systems used by the verification suites, small enough for desk runs."""
    rng = np.random.default_rng(seed)
    systems = [full_system(2), full_system(3), band_system(3, 1), band_system(4, 1),
               direct_sum(full_system(1), full_system(2)), diagzero_system(2),
               diagzero_system(3)]
    # one path-like pattern on three points and a denser one on four
    for size, q in ((3, 0.4), (4, 0.6)):
        m = random_metric_space(rng, size)
        gaps = np.sort(m.dist[np.triu_indices(size, 1)])
        systems.append(tolerance_system(m, float(np.quantile(gaps, q))))
    return systems


def line_metric(N, spacing=1.0):
    return FiniteMetricSpace.from_coords(spacing * np.arange(N, dtype=float))


__all__ = [
    "pattern_system", "full_system", "diagzero_system", "band_system", "direct_sum",
    "FiniteMetricSpace", "ToleranceRelation", "tolerance_system", "load_metric_csv",
    "save_metric_csv", "save_system", "load_system", "save_map", "load_map",
    "random_metric_space", "standard_zoo", "line_metric",
]
