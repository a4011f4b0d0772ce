"""Point sets on the unit sphere: storage, genericity, sampling, files.

A point set is a d x N matrix X whose columns are the points x^(1), ...,
x^(N). The enumeration machinery in this package requires X to be generic:
every subset of at most d columns must be linearly independent. Genericity
holds almost surely for i.i.d. uniform samples and is an open condition,
so it is certified numerically through smallest singular values.

Index sets are always sorted ascending and use 1-based point indices; the
rank of l within I (1-based position) selects per-point coefficients in
gradient formulas downstream.
"""

from dataclasses import dataclass
from itertools import combinations
import json
import math

import numpy as np

from .errors import DimensionError, PointSetFormatError

#: Smallest-singular-value threshold below which a subset counts as dependent.
GENERICITY_TOL = 1e-10

#: Unit-norm defect allowed for "on the sphere".
SPHERE_TOL = 1e-12

_SPOT_CHECK_BUDGET = 100_000
_SPOT_CHECK_SEED = 20260817


class PointSet:
    """Immutable d x N collection of points (one column per point).

    Parameters
    ----------
    X : array_like, shape (d, N)
        Finite real entries; column i is the point x^(i).
    """

    __slots__ = ("X",)

    def __init__(self, X):
        X = np.array(X, dtype=float, order="C", copy=True)
        if X.ndim != 2:
            raise PointSetFormatError(
                f"point set must be a 2-D array, got shape {X.shape}")
        if X.shape[1] < 1:
            raise PointSetFormatError("point set must contain at least one point")
        if not np.isfinite(X).all():
            bad = np.argwhere(~np.isfinite(X))[0]
            raise PointSetFormatError(
                "non-finite entry in point set",
                row=int(bad[1]), col=int(bad[0]))
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    def __setattr__(self, name, value):
        raise AttributeError("PointSet is immutable")

    @property
    def d(self):
        return self.X.shape[0]

    @property
    def N(self):
        return self.X.shape[1]

    def norm_defect(self):
        """max_i | ||x^(i)|| - 1 |."""
        return float(np.abs(np.linalg.norm(self.X, axis=0) - 1.0).max())

    def is_on_sphere(self, tol=SPHERE_TOL):
        return self.norm_defect() <= tol

    def __repr__(self):
        return f"PointSet(d={self.d}, N={self.N})"


def as_points(X):
    """Coerce a PointSet or array_like to a (d, N) float array."""
    if isinstance(X, PointSet):
        return X.X
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise PointSetFormatError(
            f"point set must be a 2-D array, got shape {X.shape}")
    return X


@dataclass(frozen=True)
class GenericityReport:
    """Outcome of a genericity check.

    Attributes
    ----------
    generic : bool
    worst_sigma_min : float
        Smallest singular value seen over all tested maximal-size subsets.
    worst_subset : tuple of int
        1-based indices of the subset attaining worst_sigma_min.
    n_checked : int
        Number of subsets tested.
    exhaustive : bool
        True when every maximal-size subset was tested; otherwise the check
        is a randomized spot check (subsets visited later by the
        discrepancy enumeration are still verified by its factorization
        pivots).
    """

    generic: bool
    worst_sigma_min: float
    worst_subset: tuple
    n_checked: int
    exhaustive: bool


def is_generic(X, tol=GENERICITY_TOL):
    """Certify that every subset of at most d columns is independent.

    It suffices to inspect subsets of maximal size m = min(d, N): a
    dependent smaller subset stays dependent inside every superset of size
    m, so the smallest singular value over maximal subsets bounds them all.

    Exhaustive when C(N, m) <= 100000; beyond that a seeded random spot
    check of 100000 subsets is used.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
    tol : float
        Positive threshold on the smallest singular value, default 1e-10.

    Returns
    -------
    GenericityReport
    """
    X = as_points(X)
    d, N = X.shape
    m = min(d, N)
    total = math.comb(N, m)
    exhaustive = total <= _SPOT_CHECK_BUDGET
    if exhaustive:
        subsets = np.array(list(combinations(range(N), m)), dtype=np.intp)
    else:
        rng = np.random.default_rng(_SPOT_CHECK_SEED)
        draws = np.empty((_SPOT_CHECK_BUDGET, m), dtype=np.intp)
        for row in range(_SPOT_CHECK_BUDGET):
            draws[row] = rng.choice(N, size=m, replace=False)
        draws.sort(axis=1)
        subsets = np.unique(draws, axis=0)

    worst = np.inf
    worst_subset = None
    n_checked = 0
    XT = np.ascontiguousarray(X.T)
    block = max(1, 2_000_000 // max(d * m, 1))
    for start in range(0, len(subsets), block):
        chunk = subsets[start:start + block]
        stacks = XT[chunk].transpose(0, 2, 1)          # (B, d, m)
        sigma = np.linalg.svd(stacks, compute_uv=False)[:, -1]
        j = int(np.argmin(sigma))
        if sigma[j] < worst:
            worst = float(sigma[j])
            worst_subset = tuple(int(i) + 1 for i in chunk[j])
        n_checked += len(chunk)

    return GenericityReport(
        generic=bool(worst > tol),
        worst_sigma_min=worst,
        worst_subset=worst_subset,
        n_checked=n_checked,
        exhaustive=exhaustive,
    )


def sample_uniform_sphere(d, N, seed):
    """Draw N independent uniform points on S^{d-1}.

    Standard Gaussian vectors scaled to unit norm; deterministic per seed.

    Parameters
    ----------
    d : int
        Ambient dimension, d >= 2.
    N : int
        Number of points, N >= 1.
    seed : int

    Returns
    -------
    PointSet
    """
    d, N = int(d), int(N)
    if d < 2:
        raise DimensionError(f"sampling requires d >= 2, got d={d}")
    if N < 1:
        raise ValueError(f"need N >= 1 points, got N={N}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((d, N))
    X /= np.linalg.norm(X, axis=0)
    return PointSet(X)


def enumerate_index_sets(N, d, min_size=1):
    """Yield every index set I with min_size <= #I <= min(d, N).

    Indices are 1-based, each set sorted ascending; sets come out by size
    ascending and lexicographically within a size. Total count is
    sum_{k=min_size}^{min(d,N)} C(N, k).

    Parameters
    ----------
    N : int
    d : int
    min_size : int
        1 for the full family, 2 for the reduced family used on-sphere.

    Yields
    ------
    tuple of int
    """
    N, d, min_size = int(N), int(d), int(min_size)
    if not 1 <= min_size <= d:
        raise ValueError(f"min_size must be in [1, d], got {min_size}")
    for k in range(min_size, min(d, N) + 1):
        for comb in combinations(range(1, N + 1), k):
            yield comb


def iter_index_blocks(N, k, max_rows):
    """Stream lexicographic size-k subsets of {0..N-1} as index matrices.

    Yields contiguous blocks of at most about max_rows subsets, each a
    (rows, k) array of 0-based indices in global lexicographic order.
    Block boundaries depend only on (N, k, max_rows), never on the
    consumer, so parallel consumers see a deterministic partition.

    Parameters
    ----------
    N, k : int
    max_rows : int

    Yields
    ------
    ndarray of intp, shape (rows, k)
    """
    N, k = int(N), int(k)
    if k < 1 or k > N:
        return
    if k == 1:
        idx = np.arange(N, dtype=np.intp)[:, None]
        for start in range(0, N, max_rows):
            yield idx[start:start + max_rows]
        return
    if k == 2:
        ii, jj = np.triu_indices(N, 1)
        pairs = np.column_stack([ii, jj]).astype(np.intp, copy=False)
        for start in range(0, len(pairs), max_rows):
            yield pairs[start:start + max_rows]
        return

    # size >= 3: lexicographic prefixes of length k-2, last two slots from
    # the upper-triangular template over the remaining tail
    tail_cache = {}
    use_cache = k >= 4
    pending = []
    pending_rows = 0
    for prefix in combinations(range(N), k - 2):
        p = prefix[-1]
        m = N - 1 - p
        if m < 2:
            continue
        if use_cache and m in tail_cache:
            jj, kk = tail_cache[m]
        else:
            jj, kk = np.triu_indices(m, 1)
            if use_cache:
                tail_cache[m] = (jj, kk)
        rows = len(jj)
        block = np.empty((rows, k), dtype=np.intp)
        for pos, val in enumerate(prefix):
            block[:, pos] = val
        block[:, k - 2] = jj + p + 1
        block[:, k - 1] = kk + p + 1
        pending.append(block)
        pending_rows += rows
        if pending_rows >= max_rows:
            yield np.concatenate(pending) if len(pending) > 1 else pending[0]
            pending = []
            pending_rows = 0
    if pending:
        yield np.concatenate(pending) if len(pending) > 1 else pending[0]


def save_pointset(X, path, format="csv"):
    """Write a point set to disk, one point per row.

    CSV files get a "# d=<d> N=<N>" header line and 17-significant-digit
    values so that load_pointset round-trips bitwise. JSON files hold
    {"d": ..., "N": ..., "points": [[...], ...]}.
    """
    X = as_points(X)
    d, N = X.shape
    if format == "csv":
        lines = [f"# d={d} N={N}"]
        for i in range(N):
            lines.append(",".join(repr(float(v)) for v in X[:, i]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    elif format == "json":
        payload = {
            "d": d,
            "N": N,
            "points": [[float(v) for v in X[:, i]] for i in range(N)],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {format!r}, expected csv or json")


def load_pointset(path, format=None):
    """Read a point set written by save_pointset (or compatible files).

    Parameters
    ----------
    path : str
    format : str or None
        "csv" or "json"; inferred from the file suffix when None.

    Returns
    -------
    PointSet
    """
    path = str(path)
    if format is None:
        format = "json" if path.endswith(".json") else "csv"
    try:
        if format == "json":
            return _load_json(path)
        if format == "csv":
            return _load_csv(path)
    except OSError as exc:
        raise PointSetFormatError(f"cannot read {path}: {exc}") from exc
    raise ValueError(f"unknown format {format!r}, expected csv or json")


def _load_json(path):
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PointSetFormatError(
                f"invalid JSON in {path}: {exc}") from exc
    for key in ("d", "N", "points"):
        if key not in payload:
            raise PointSetFormatError(f"JSON point set missing key {key!r}")
    d, N = int(payload["d"]), int(payload["N"])
    points = payload["points"]
    if len(points) != N:
        raise PointSetFormatError(
            f"JSON declares N={N} but holds {len(points)} points")
    X = np.empty((d, N), dtype=float)
    for i, pt in enumerate(points):
        if len(pt) != d:
            raise PointSetFormatError(
                f"point {i} has {len(pt)} coordinates, expected d={d}",
                row=i)
        X[:, i] = pt
    return PointSet(X)


def _load_csv(path):
    rows = []
    row_lines = []
    declared = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                declared = _parse_csv_header(line, declared)
                continue
            fields = line.split(",")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                bad = next(i for i, f in enumerate(fields)
                           if not _is_float(f))
                raise PointSetFormatError(
                    f"unparseable value {fields[bad]!r} at line {lineno} "
                    f"column {bad + 1}",
                    row=lineno, col=bad + 1) from None
            row_lines.append(lineno)
    if not rows:
        raise PointSetFormatError(f"no data rows in {path}")
    d = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != d:
            raise PointSetFormatError(
                f"line {row_lines[i]} has {len(row)} columns, expected {d}",
                row=row_lines[i])
    if declared is not None:
        dd, nn = declared
        if dd is not None and dd != d:
            raise PointSetFormatError(
                f"header declares d={dd} but rows have {d} columns")
        if nn is not None and nn != len(rows):
            raise PointSetFormatError(
                f"header declares N={nn} but file has {len(rows)} rows")
    return PointSet(np.array(rows, dtype=float).T)


def _parse_csv_header(line, declared):
    d, n = declared if declared is not None else (None, None)
    for token in line.lstrip("#").split():
        if token.startswith("d="):
            d = int(token[2:])
        elif token.startswith("N="):
            n = int(token[2:])
    return (d, n)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
