"""Exact spherical cap discrepancy via subset enumeration.

The discrepancy of X = (x^(1), ..., x^(N)) on S^{d-1} is the supremum of
|empirical measure - cap measure| over all closed caps. For generic X the
supremum is attained on a finite candidate family: for every index set I
with 1 <= #I <= d there is exactly one cap whose boundary passes through
the points indexed by I, with parameters

    t_I = (1^T (X_I^T X_I)^{-1} 1)^(-1/2),
    w_I = t_I * X_I (X_I^T X_I)^{-1} 1,

and the discrepancy is the maximum over I of

    max{ mu_emp(X, w_I, t_I) - mu_cap(t_I),
         mu_emp(X, -w_I, -t_I) - mu_cap(-t_I) }.

On the sphere the singletons are dominated by pairs, so index sets of size
2..d suffice (the reduced family); off the sphere the full family 1..d is
used together with the C^1-extended cap measure, which defines the
generalized discrepancy for generic X with arbitrary norms.

The enumeration is evaluated in vectorized blocks: subsets are streamed as
index matrices, the small Gram systems are solved by a batched Cholesky
factorization whose pivots double as the genericity check, and the point
counts come from one projection pass per block. Block boundaries and the
running-maximum reduction are deterministic for any thread count.
"""

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
import os
import threading

import numpy as np

from .capmeasure import (
    cap_measure,
    cap_measure_batch,
    cap_measure_extended,
    cap_measure_extended_batch,
)
from .errors import DegeneracyError, DimensionError, NormalizationError
from .pointset import (
    GENERICITY_TOL,
    SPHERE_TOL,
    as_points,
    iter_index_blocks,
)

#: Tolerance of the closed half-space count <w, x> >= t - EPS_COUNT.
#: Boundary points satisfy equality analytically; the tolerance errs
#: toward inclusion, matching the closed-cap definition.
EPS_COUNT = 1e-9

#: A computed Cholesky pivot at or below this floor flags the subset for
#: closer inspection. Exact pivots of X_I^T X_I are bounded below by
#: sigma_min(X_I)^2, but computed pivots carry absolute rounding error of
#: order eps * ||G||, so values below ~1e-14 are indistinguishable from
#: noise and cannot be compared against the squared genericity tolerance
#: directly. Flagged subsets get an exact SVD check: sigma_min at or below
#: the genericity tolerance raises DegeneracyError, anything above it is
#: re-solved through the SVD (numerically stable at high condition
#: numbers) and kept. Either way the returned normals are renormalized,
#: so every evaluated cap is genuine and ill conditioning can only blur
#: a flagged subset's own local value, never inflate the maximum.
PIVOT_FLOOR = 1e-12

FAMILY_FULL = "phi"        # index sets of size 1..d
FAMILY_REDUCED = "phibar"  # index sets of size 2..d (valid on-sphere)

_BLOCK_ROWS = 65536   # subsets per enumeration block
_STRIPE_ROWS = 8192   # rows per projection/count stripe inside a block


@dataclass(frozen=True)
class CapParams:
    """Cap through the points indexed by I.

    Attributes
    ----------
    index_set : tuple of int
        Sorted 1-based point indices.
    t : float
        Cap height, positive; at most 1 for on-sphere points.
    w : ndarray, shape (d,)
        Unit normal; <w, x^(l)> = t for every l in I.
    c : ndarray, shape (#I,)
        Column sums of the Gram inverse, c_j = ((X_I^T X_I)^{-1} 1)_j;
        these drive the gradient formulas.
    """

    index_set: tuple
    t: float
    w: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class LocalDiscrepancy:
    """One candidate cap's signed local discrepancy.

    side 1 is the cap (w_I, t_I), side 2 the complementary cap
    (-w_I, -t_I). value = emp - cap with emp kept exact as a Fraction.
    """

    index_set: tuple
    side: int
    value: float
    emp: Fraction
    cap: float


@dataclass(frozen=True)
class DiscrepancyResult:
    """Discrepancy value together with the attaining cap.

    Attributes
    ----------
    value : float
    index_set : tuple of int
        Witness index set I*.
    side : int
        1 or 2; side 2 means the complementary cap attains the maximum.
    w : ndarray, shape (d,)
        Witness cap normal (already sign-resolved for the side).
    t : float
        Witness cap height (sign-resolved; negative for side 2).
    emp : Fraction
        Empirical measure of the witness cap.
    cap : float
        Cap measure of the witness cap.
    family : str
    n_subsets : int
        Number of index sets enumerated.
    locals : list of LocalDiscrepancy or None
        Full table when requested, in enumeration order.
    """

    value: float
    index_set: tuple
    side: int
    w: np.ndarray
    t: float
    emp: Fraction
    cap: float
    family: str
    n_subsets: int
    locals: object = None

    @property
    def witness(self):
        return (self.index_set, self.side, self.w, self.t)


def empirical_measure(X, w, t, eps=EPS_COUNT):
    """Fraction of points in the closed half-space {x : <w, x> >= t}.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
    w : array_like, shape (d,)
        Need not be normalized.
    t : float
    eps : float
        Counting tolerance; points with <w, x> >= t - eps are counted.

    Returns
    -------
    Fraction
        Exact count over N.
    """
    X = as_points(X)
    proj = X.T @ np.asarray(w, dtype=float)
    count = int(np.count_nonzero(proj >= t - eps))
    return Fraction(count, X.shape[1])


def cap_params(X, index_set):
    """Parameters (t_I, w_I, c) of the cap through the points of I.

    The Gram system (X_I^T X_I) c = 1 is solved through a Cholesky
    factorization. When a computed pivot falls to the rounding floor the
    subset is re-examined by SVD: sigma_min(X_I) at or below the
    genericity tolerance raises DegeneracyError, otherwise the SVD solve
    replaces the unreliable Cholesky result.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
    index_set : iterable of int
        1-based point indices, at most d of them.

    Returns
    -------
    CapParams
    """
    X = as_points(X)
    d, N = X.shape
    I = _validate_index_set(index_set, d, N)
    XI = X[:, [l - 1 for l in I]]
    G = XI.T @ XI
    k = len(I)
    suspect = False
    c = None
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        suspect = True
    else:
        if float((np.diag(L) ** 2).min()) <= PIVOT_FLOOR:
            suspect = True
        else:
            c = np.linalg.solve(L.T, np.linalg.solve(L, np.ones(k)))
            alpha = float(c.sum())
            if alpha <= 0.0 or not np.isfinite(alpha):
                suspect = True
    if suspect:
        t, w, c = _svd_cap_row(XI.T, I)
        return CapParams(index_set=I, t=t, w=w, c=c)
    t = alpha ** -0.5
    w = (XI @ c) * t
    # ||w|| = 1 holds analytically; renormalizing absorbs the roundoff so
    # (w, t) always describes a genuine cap
    norm = float(np.linalg.norm(w))
    return CapParams(index_set=I, t=t / norm, w=w / norm, c=c)


def local_discrepancy(X, index_set, side, eps=EPS_COUNT):
    """Local discrepancy of the cap generated by I, on one side.

    side 1 evaluates the cap (w_I, t_I), side 2 the complementary cap
    (-w_I, -t_I). The plain cap measure is used while the height lies in
    [-1, 1]; outside, the C^1 extension takes over (requires d >= 3).

    Returns
    -------
    LocalDiscrepancy
    """
    X = as_points(X)
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    params = cap_params(X, index_set)
    w, t = (params.w, params.t) if side == 1 else (-params.w, -params.t)
    emp = empirical_measure(X, w, t, eps=eps)
    if abs(t) <= 1.0:
        cap = cap_measure(t, X.shape[0])
    else:
        cap = cap_measure_extended(t, X.shape[0])
    return LocalDiscrepancy(
        index_set=params.index_set, side=side,
        value=float(emp) - cap, emp=emp, cap=cap)


def discrepancy(X, family=None, with_locals=False, threads=1,
                eps=EPS_COUNT, sphere_tol=SPHERE_TOL):
    """Exact cap discrepancy of an on-sphere generic point set.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
        Columns must have unit norm within sphere_tol.
    family : str or None
        FAMILY_REDUCED ("phibar", size 2..d, default for N >= 2) or
        FAMILY_FULL ("phi", size 1..d). Both yield the same value on the
        sphere; the reduced family skips dominated singletons.
    with_locals : bool
        Also return the full table of local discrepancies (large:
        2 * sum_k C(N, k) entries).
    threads : int
        Worker threads for the enumeration; the result is bitwise
        independent of this value.
    eps : float
        Counting tolerance, see EPS_COUNT.
    sphere_tol : float
        Allowed unit-norm defect.

    Returns
    -------
    DiscrepancyResult
    """
    X = as_points(X)
    d, N = X.shape
    if d < 2:
        raise DimensionError(f"discrepancy requires d >= 2, got d={d}")
    defect = float(np.abs(np.linalg.norm(X, axis=0) - 1.0).max())
    if defect > sphere_tol:
        raise NormalizationError(
            f"point norms deviate from 1 by {defect:.3e} (tol {sphere_tol:.1e}); "
            "use generalized_discrepancy for off-sphere sets")
    if family is None:
        family = FAMILY_REDUCED if N >= 2 else FAMILY_FULL
    min_size = _family_min_size(family, N)
    return _scan_engine(X, min_size=min_size, extended=False, eps=eps,
                        threads=threads, want_locals=with_locals,
                        family=family)


def generalized_discrepancy(X, with_locals=False, threads=1, eps=EPS_COUNT):
    """Generalized cap discrepancy of a generic point set of any norms.

    Uses the C^1-extended cap measure, so d >= 3 is required. Equals the
    plain discrepancy whenever all points lie on the sphere. Always
    enumerates the full family (singletons included; the reduction to
    pairs is only valid on the sphere).

    Returns
    -------
    DiscrepancyResult
    """
    X = as_points(X)
    d, N = X.shape
    if d < 3:
        raise DimensionError(
            f"the generalized discrepancy requires d >= 3, got d={d}")
    return _scan_engine(X, min_size=1, extended=True, eps=eps,
                        threads=threads, want_locals=with_locals,
                        family=FAMILY_FULL)


def _family_min_size(family, N):
    if family == FAMILY_FULL:
        return 1
    if family == FAMILY_REDUCED:
        if N < 2:
            raise ValueError(
                "the reduced family needs N >= 2; use the full family")
        return 2
    raise ValueError(
        f"unknown family {family!r}, expected {FAMILY_FULL!r} or "
        f"{FAMILY_REDUCED!r}")


def _validate_index_set(index_set, d, N):
    I = tuple(int(l) for l in index_set)
    if not I:
        raise ValueError("index set must not be empty")
    if any(l < 1 or l > N for l in I):
        raise ValueError(f"index set {I} out of range 1..{N}")
    if len(set(I)) != len(I):
        raise ValueError(f"index set {I} has repeated indices")
    if len(I) > d:
        raise ValueError(f"index set {I} larger than dimension d={d}")
    return tuple(sorted(I))


# ---------------------------------------------------------------------------
# batched enumeration engine


class _StripeBuffers(threading.local):
    """Per-thread projection and comparison scratch space."""

    def get(self, n_cols):
        cur = getattr(self, "arrays", None)
        if cur is None or cur[0].shape[1] != n_cols:
            proj = np.empty((_STRIPE_ROWS, n_cols))
            mask = np.empty((_STRIPE_ROWS, n_cols), dtype=bool)
            self.arrays = (proj, mask)
        return self.arrays


_buffers = _StripeBuffers()


def _svd_cap_row(points, index_set):
    """Stable cap parameters for one subset, or DegeneracyError.

    `points` holds the subset's points as rows (k, d). The SVD route
    stays accurate where Cholesky pivots drown in rounding noise, and it
    measures sigma_min exactly enough to compare against the genericity
    tolerance.
    """
    XI = np.ascontiguousarray(points.T)           # (d, k)
    U, S, Vt = np.linalg.svd(XI, full_matrices=False)
    sigma_min = max(float(S[-1]), 0.0)
    if sigma_min <= GENERICITY_TOL:
        raise DegeneracyError(
            f"points {index_set} are numerically dependent "
            f"(sigma_min {sigma_min:.2e} <= {GENERICITY_TOL})",
            index_set=index_set)
    v1 = Vt @ np.ones(len(S))
    c = Vt.T @ (v1 / S ** 2)
    w = U @ (v1 / S)
    norm = float(np.linalg.norm(w))
    return 1.0 / norm, w / norm, c


def _solve_gram_blocks(XT, block):
    """Cap parameters for one block of subsets.

    Solves (X_I^T X_I) z = 1 for every row of `block` by an unrolled
    batched Cholesky. Rows whose computed pivots reach the rounding
    floor are re-examined one by one: truly dependent subsets (sigma_min
    at or below the genericity tolerance) raise DegeneracyError, naming
    the first offender in enumeration order; barely generic ones are
    re-solved by SVD and kept.

    Returns t (rows,), w (rows, d), z (rows, k).
    """
    rows, k = block.shape
    Xs = XT[block]                                # (rows, k, d)
    G = np.matmul(Xs, Xs.transpose(0, 2, 1))      # (rows, k, k)
    L = np.zeros((rows, k, k))
    diag = np.empty((rows, k))
    bad = np.zeros(rows, dtype=bool)
    for j in range(k):
        s = G[:, j, j].copy()
        for p in range(j):
            s -= L[:, j, p] ** 2
        failed = s <= PIVOT_FLOOR
        bad |= failed
        np.copyto(s, 1.0, where=failed)   # keep arithmetic alive
        dj = np.sqrt(s)
        diag[:, j] = dj
        L[:, j, j] = dj
        for i in range(j + 1, k):
            acc = G[:, i, j].copy()
            for p in range(j):
                acc -= L[:, i, p] * L[:, j, p]
            L[:, i, j] = acc / dj
    y = np.empty((rows, k))
    for i in range(k):
        acc = np.ones(rows)
        for p in range(i):
            acc = acc - L[:, i, p] * y[:, p]
        y[:, i] = acc / diag[:, i]
    z = np.empty((rows, k))
    for i in range(k - 1, -1, -1):
        acc = y[:, i].copy()
        for p in range(i + 1, k):
            acc -= L[:, p, i] * z[:, p]
        z[:, i] = acc / diag[:, i]
    alpha = z.sum(axis=1)
    np.logical_or(bad, ~np.isfinite(alpha), out=bad)
    np.logical_or(bad, alpha <= 0.0, out=bad)
    t = alpha ** -0.5
    w = np.matmul(z[:, None, :], Xs)[:, 0, :] * t[:, None]
    # renormalize so every row is a genuine cap even when G was
    # ill conditioned (||w|| = 1 is an algebraic identity otherwise)
    norms = np.linalg.norm(w, axis=1)
    w /= norms[:, None]
    t = t / norms
    if bad.any():
        for r in np.flatnonzero(bad):
            r = int(r)
            I = tuple(int(i) + 1 for i in block[r])
            t[r], w[r], z[r] = _svd_cap_row(Xs[r], I)
    return t, w, z


def _count_halfspaces(X, w, t, eps):
    """Closed counts on both sides for every cap in the block.

    c1[r] = #{i : <w_r, x^(i)> >= t_r - eps}
    c2[r] = #{i : <-w_r, x^(i)> >= -t_r - eps}

    The projection matrix is produced and consumed stripe by stripe so it
    stays cache resident.
    """
    rows = len(t)
    N = X.shape[1]
    proj_buf, mask_buf = _buffers.get(N)
    c1 = np.empty(rows, dtype=np.int64)
    c2 = np.empty(rows, dtype=np.int64)
    lo = t - eps
    hi = t + eps
    for start in range(0, rows, _STRIPE_ROWS):
        stop = min(start + _STRIPE_ROWS, rows)
        n = stop - start
        P = np.matmul(w[start:stop], X, out=proj_buf[:n])
        np.greater_equal(P, lo[start:stop, None], out=mask_buf[:n])
        c1[start:stop] = np.count_nonzero(mask_buf[:n], axis=1)
        np.less_equal(P, hi[start:stop, None], out=mask_buf[:n])
        c2[start:stop] = np.count_nonzero(mask_buf[:n], axis=1)
    return c1, c2


def _scan_block(X, XT, block, extended, eps):
    """Evaluate both sides of every cap in one subset block.

    Returns the block-local running maximum (value, row, side) plus the
    per-row arrays needed for witness extraction and locals tables.
    """
    d, N = X.shape
    t, w, _ = _solve_gram_blocks(XT, block)
    c1, c2 = _count_halfspaces(X, w, t, eps)
    if extended:
        mu1 = cap_measure_extended_batch(t, d)
        mu2 = cap_measure_extended_batch(-t, d)
    else:
        mu1 = cap_measure_batch(t, d)
        mu2 = cap_measure_batch(-t, d)
    v1 = c1 / N - mu1
    v2 = c2 / N - mu2
    # first occurrence in row-major (subset, side) order wins ties
    stacked = np.stack([v1, v2], axis=1)
    flat = int(np.argmax(stacked))
    row, side = divmod(flat, 2)
    best = float(stacked[row, side])
    return {
        "best": best, "row": row, "side": side + 1,
        "t": t, "w": w, "c1": c1, "c2": c2,
        "mu1": mu1, "mu2": mu2, "v1": v1, "v2": v2,
    }


def _ordered_parallel(fn, items, threads):
    """Map fn over items with a bounded worker pool, yielding in order.

    The yield order matches the input order for any worker count, so
    reductions over the results are schedule independent. Worker counts
    beyond the machine's cores add no throughput and are clamped.
    """
    threads = min(int(threads), os.cpu_count() or 1)
    if threads <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        window = deque()
        for item in items:
            window.append(pool.submit(fn, item))
            while len(window) > 2 * threads:
                yield window.popleft().result()
        while window:
            yield window.popleft().result()


def _scan_engine(X, min_size, extended, eps, threads, want_locals, family):
    d, N = X.shape
    XT = np.ascontiguousarray(X.T)

    def blocks():
        for k in range(min_size, min(d, N) + 1):
            yield from iter_index_blocks(N, k, _BLOCK_ROWS)

    def work(block):
        return block, _scan_block(X, XT, block, extended, eps)

    best_val = -np.inf
    best_payload = None
    n_subsets = 0
    locals_table = [] if want_locals else None

    for block, out in _ordered_parallel(work, blocks(), threads):
        n_subsets += len(block)
        if out["best"] > best_val:
            best_val = out["best"]
            r, s = out["row"], out["side"]
            sign = 1.0 if s == 1 else -1.0
            count = out["c1"][r] if s == 1 else out["c2"][r]
            mu = out["mu1"][r] if s == 1 else out["mu2"][r]
            best_payload = {
                "index_set": tuple(int(i) + 1 for i in block[r]),
                "side": s,
                "w": sign * out["w"][r].copy(),
                "t": sign * float(out["t"][r]),
                "emp": Fraction(int(count), N),
                "cap": float(mu),
            }
        if want_locals:
            for r in range(len(block)):
                I = tuple(int(i) + 1 for i in block[r])
                locals_table.append(LocalDiscrepancy(
                    index_set=I, side=1, value=float(out["v1"][r]),
                    emp=Fraction(int(out["c1"][r]), N),
                    cap=float(out["mu1"][r])))
                locals_table.append(LocalDiscrepancy(
                    index_set=I, side=2, value=float(out["v2"][r]),
                    emp=Fraction(int(out["c2"][r]), N),
                    cap=float(out["mu2"][r])))

    if best_payload is None:
        raise ValueError("empty index family; nothing to enumerate")
    return DiscrepancyResult(
        value=best_val,
        index_set=best_payload["index_set"],
        side=best_payload["side"],
        w=best_payload["w"],
        t=best_payload["t"],
        emp=best_payload["emp"],
        cap=best_payload["cap"],
        family=family,
        n_subsets=n_subsets,
        locals=locals_table,
    )
