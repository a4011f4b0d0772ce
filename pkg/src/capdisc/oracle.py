"""Brute-force validators independent of the enumeration machinery.

The discrepancy is a supremum over all caps. Restricting the supremum to a
finite direction sample gives a lower bound that is exact in the threshold
variable: for a fixed direction w the best cap height is always one of the
sorted projections <w, x^(i)> (closed caps) or sits just beyond one (open
caps), so a one-dimensional exact maximization per direction suffices.
Cap normals generated by all 2-subsets are mixed into the sample, which
makes the oracle exact for very small point sets.

The open-cap variant counts points with strict inequality; its supremum
agrees with the closed one, which is checked rather than assumed. A plain
Monte-Carlo estimator for the cap measure itself closes the loop on the
quadrature routines.
"""

from dataclasses import dataclass

import numpy as np

from .capmeasure import cap_measure_batch
from .discrepancy import CapParams, cap_params
from .errors import DegeneracyError, NormalizationError
from .pointset import GENERICITY_TOL, SPHERE_TOL, as_points, iter_index_blocks

#: Relative shift used to realize "just beyond a projection" thresholds.
EPS_OPEN = 1e-12


@dataclass(frozen=True)
class OracleResult:
    """Best cap found by direction sampling.

    value is a lower bound of the exact discrepancy (up to roundoff).
    """

    value: float
    best_direction: np.ndarray
    best_threshold: float
    n_directions: int
    variant: str


@dataclass(frozen=True)
class McCapEstimate:
    """Monte-Carlo cap measure estimate with its binomial standard error."""

    value: float
    stderr: float
    n_samples: int


def oracle_discrepancy(X, n_directions, seed, variant="closed",
                       eps_open=EPS_OPEN, sphere_tol=SPHERE_TOL):
    """Direction-sampling lower bound of the cap discrepancy.

    For each direction the supremum over cap heights of
    |empirical - cap measure| is attained at a projection value (or just
    beyond one); all such candidates plus t = +-1 are evaluated exactly.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
        On the unit sphere.
    n_directions : int
        Number of uniform random directions; the first rows of a larger
        sample with the same seed reproduce a smaller one, so the value
        is non-decreasing in n_directions at fixed seed. Cap normals of
        all 2-subsets (both signs) are appended regardless.
    seed : int
    variant : str
        "closed" counts <w, x> >= t, "open" counts <w, x> > t. The two
        attained maxima agree up to the threshold shift.
    eps_open : float
        Relative shift realizing thresholds just beyond a projection.

    Returns
    -------
    OracleResult
    """
    X = as_points(X)
    d, N = X.shape
    n_directions = int(n_directions)
    if n_directions < 0:
        raise ValueError("n_directions must be >= 0")
    if variant not in ("closed", "open"):
        raise ValueError(f"variant must be closed or open, got {variant!r}")
    defect = float(np.abs(np.linalg.norm(X, axis=0) - 1.0).max())
    if defect > sphere_tol:
        raise NormalizationError(
            f"oracle requires on-sphere points, norm defect {defect:.3e}")

    rng = np.random.default_rng(seed)
    parts = []
    if n_directions:
        W = rng.standard_normal((n_directions, d))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        parts.append(W)
    if N >= 2:
        pair_normals = []
        for block in iter_index_blocks(N, 2, 65536):
            for row in block:
                w = cap_params(X, (int(row[0]) + 1, int(row[1]) + 1)).w
                pair_normals.append(w)
                pair_normals.append(-w)
        parts.append(np.array(pair_normals))
    if not parts:
        raise ValueError(
            "no directions to test: n_directions=0 and no 2-subsets")
    directions = np.concatenate(parts) if len(parts) > 1 else parts[0]

    side = "left" if variant == "closed" else "right"
    best = -np.inf
    best_dir = directions[0]
    best_t = 1.0
    for w in directions:
        proj = np.sort(X.T @ w)
        shift = eps_open * np.maximum(1.0, np.abs(proj))
        cand = np.concatenate(
            [proj, proj + shift, proj - shift, [-1.0, 1.0]])
        np.clip(cand, -1.0, 1.0, out=cand)
        counts = N - np.searchsorted(proj, cand, side=side)
        vals = np.abs(counts / N - cap_measure_batch(cand, d))
        r = int(np.argmax(vals))
        if vals[r] > best:
            best = float(vals[r])
            best_dir = np.array(w)
            best_t = float(cand[r])
    return OracleResult(
        value=best,
        best_direction=best_dir,
        best_threshold=best_t,
        n_directions=len(directions),
        variant=variant,
    )


def cap_params_alt(X, index_set):
    """Cap parameters without forming the Gram matrix.

    Only for full-size index sets (#I = d): the linear system
    X_I^T w' = 1 is solved directly, then w = w'/||w'|| and t = 1/||w'||,
    since the defining property of the cap is <w, x^(l)> = t with t > 0.
    Serves as an independent cross-check of the Gram-based route.

    Returns
    -------
    CapParams
    """
    X = as_points(X)
    d, N = X.shape
    I = tuple(sorted(int(l) for l in index_set))
    if len(I) != d:
        raise ValueError(
            f"the direct solver needs a full-size index set (#I = d = {d})")
    if any(l < 1 or l > N for l in I) or len(set(I)) != d:
        raise ValueError(f"invalid index set {I} for N={N}")
    XI = X[:, [l - 1 for l in I]]
    # LU with partial pivoting can "solve" a numerically singular system
    # without complaint, so gate on sigma_min like the main engine does.
    sigma_min = max(float(np.linalg.svd(XI, compute_uv=False)[-1]), 0.0)
    if sigma_min <= GENERICITY_TOL:
        raise DegeneracyError(
            f"points {I} are numerically dependent "
            f"(sigma_min {sigma_min:.2e} <= {GENERICITY_TOL})", index_set=I)
    wp = np.linalg.solve(XI.T, np.ones(d))
    c = np.linalg.solve(XI, wp)
    norm = float(np.linalg.norm(wp))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegeneracyError(
            f"points {I} give an unstable system", index_set=I)
    return CapParams(index_set=I, t=1.0 / norm, w=wp / norm, c=c)


def mc_cap_measure(t, d, n_samples, seed):
    """Monte-Carlo estimate of the cap measure.

    Counts uniform sphere samples with first coordinate >= t; the cap
    measure is rotation invariant, so any fixed direction works.

    Returns
    -------
    McCapEstimate
    """
    t = float(t)
    if not -1.0 <= t <= 1.0:
        raise ValueError(f"cap height t={t} outside [-1, 1]")
    d = int(d)
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    count = 0
    remaining = n_samples
    while remaining > 0:
        chunk = min(remaining, 262_144)
        Z = rng.standard_normal((chunk, d))
        first = Z[:, 0] / np.linalg.norm(Z, axis=1)
        count += int(np.count_nonzero(first >= t))
        remaining -= chunk
    p = count / n_samples
    stderr = float(np.sqrt(p * (1.0 - p) / n_samples))
    return McCapEstimate(value=p, stderr=stderr, n_samples=n_samples)
