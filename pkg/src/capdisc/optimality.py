"""Active caps and the stationarity residual for candidate quantizers.

At a generic point set the generalized discrepancy is the maximum of
finitely many smooth selection functions. The caps attaining that maximum
(within a tolerance) form the active set A(X). A necessary condition for X
to locally minimize the discrepancy over on-sphere point sets is the
existence of convex weights gamma over A(X) and multipliers lambda_l with

    lambda_l x^(l) = sum_{(I,s) in A, l in I} gamma_(I,s) (-1)^s
                     grad_{x^(l)} beta_I(X),        sum gamma = 1.

Eliminating lambda_l = <x^(l), g_l(gamma)> (points have unit norm) turns
the condition into a least-squares problem over the simplex: minimize the
summed squared norms of the tangentially projected combined gradients. The
square root of the minimum is the reported residual; the condition holds
exactly at X iff the residual vanishes.
"""

from dataclasses import dataclass

import numpy as np

from .discrepancy import (
    EPS_COUNT,
    _scan_block,
    generalized_discrepancy,
)
from .errors import DimensionError, NormalizationError
from .pointset import SPHERE_TOL, as_points, iter_index_blocks
from .smooth import beta_gradient

#: Default tolerance deciding which caps count as active.
ACTIVITY_TOL = 1e-9

_BLOCK_ROWS = 65536
_QP_MAX_ITER = 100_000
_QP_GM_TOL = 1e-10


@dataclass(frozen=True)
class ActiveSet:
    """Caps whose local discrepancy attains the maximum within tol.

    Attributes
    ----------
    entries : tuple of (index_set, side)
        In enumeration order (size, lexicographic, side).
    value : float
        The generalized discrepancy the activity is measured against.
    tol : float
    """

    entries: tuple
    value: float
    tol: float


@dataclass(frozen=True)
class OptimalityCertificate:
    """Result of the stationarity test at an on-sphere point set.

    Attributes
    ----------
    residual : float
        Square root of the minimized tangential least-squares objective;
        zero means the necessary condition is satisfiable at X.
    gamma : dict
        Optimal convex weights, keyed by (index_set, side).
    lam : ndarray, shape (N,)
        Recovered multipliers lambda_l = <x^(l), g_l(gamma)>.
    active : ActiveSet
    """

    residual: float
    gamma: dict
    lam: np.ndarray
    active: ActiveSet


def active_set(X, tol=ACTIVITY_TOL, eps=EPS_COUNT):
    """All (I, side) whose local discrepancy is within tol of the maximum.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
        Generic; d >= 3. Norms unconstrained (the generalized
        discrepancy is used).
    tol : float
        Activity tolerance, default 1e-9 (exact equality is meaningless
        in floating point).
    eps : float
        Counting tolerance passed through to the enumeration.

    Returns
    -------
    ActiveSet
    """
    X = as_points(X)
    d, N = X.shape
    if d < 3:
        raise DimensionError(f"active set requires d >= 3, got d={d}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    value = generalized_discrepancy(X, eps=eps).value
    cutoff = value - tol
    XT = np.ascontiguousarray(X.T)
    entries = []
    for k in range(1, min(d, N) + 1):
        for block in iter_index_blocks(N, k, _BLOCK_ROWS):
            out = _scan_block(X, XT, block, extended=True, eps=eps)
            hit1 = out["v1"] >= cutoff
            hit2 = out["v2"] >= cutoff
            for r in np.nonzero(hit1 | hit2)[0]:
                I = tuple(int(i) + 1 for i in block[r])
                if hit1[r]:
                    entries.append((I, 1))
                if hit2[r]:
                    entries.append((I, 2))
    return ActiveSet(entries=tuple(entries), value=value, tol=tol)


def optimality_residual(X, tol=ACTIVITY_TOL, eps=EPS_COUNT, gamma0=None,
                        sphere_tol=SPHERE_TOL):
    """Stationarity residual of the necessary optimality condition at X.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
        Generic, on the unit sphere, d >= 3.
    tol : float
        Activity tolerance for the active set.
    eps : float
        Counting tolerance.
    gamma0 : array_like or None
        Optional starting weights for the simplex solver (length =
        #active, on the simplex); mostly for convergence testing. The
        minimum is unique in value regardless of the start.
    sphere_tol : float

    Returns
    -------
    OptimalityCertificate
    """
    X = as_points(X)
    d, N = X.shape
    defect = float(np.abs(np.linalg.norm(X, axis=0) - 1.0).max())
    if defect > sphere_tol:
        raise NormalizationError(
            f"the optimality condition is defined on the sphere; point "
            f"norms deviate by {defect:.3e}")
    active = active_set(X, tol=tol, eps=eps)
    m = len(active.entries)

    # stacked per-entry gradient matrices, raw and tangentially projected
    raw = np.zeros((m, d, N))
    tang = np.zeros((m, d, N))
    for a, (I, side) in enumerate(active.entries):
        sign = -1.0 if side == 1 else 1.0
        table = beta_gradient(X, I)
        for l, vec in table.partials.items():
            col = sign * vec
            raw[a, :, l - 1] = col
            x = X[:, l - 1]
            tang[a, :, l - 1] = col - x * float(x @ col)

    Q = np.einsum("adn,bdn->ab", tang, tang)
    if m == 1:
        gamma = np.array([1.0])
    else:
        gamma = _minimize_simplex_qp(Q, gamma0=gamma0)
    residual = float(np.sqrt(max(float(gamma @ Q @ gamma), 0.0)))
    combined = np.tensordot(gamma, raw, axes=1)        # (d, N)
    lam = np.einsum("dl,dl->l", X, combined)
    return OptimalityCertificate(
        residual=residual,
        gamma={entry: float(g) for entry, g in zip(active.entries, gamma)},
        lam=lam,
        active=active,
    )


def project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, len(v) + 1)
    mask = u + (1.0 - css) / j > 0
    rho = int(np.nonzero(mask)[0][-1])
    theta = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + theta, 0.0)


def _minimize_simplex_qp(Q, gamma0=None, max_iter=_QP_MAX_ITER,
                         gm_tol=_QP_GM_TOL):
    """min gamma^T Q gamma over the simplex by accelerated projected descent.

    Q must be symmetric positive semidefinite. Stops when the gradient
    mapping norm drops below gm_tol or after max_iter iterations.
    """
    m = Q.shape[0]
    if gamma0 is None:
        x = np.full(m, 1.0 / m)
    else:
        x = project_simplex(gamma0)
    lip = float(np.linalg.eigvalsh(Q)[-1]) * 2.0
    if lip <= 0.0:
        return x
    eta = 1.0 / lip
    y = x.copy()
    t_k = 1.0
    for _ in range(max_iter):
        grad = 2.0 * (Q @ y)
        x_next = project_simplex(y - eta * grad)
        if float(np.linalg.norm(y - x_next)) / eta <= gm_tol:
            return x_next
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        y = x_next + ((t_k - 1.0) / t_next) * (x_next - x)
        x, t_k = x_next, t_next
    return x
