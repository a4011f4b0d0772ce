"""Gradients of the smooth cap-measure compositions and Lipschitz bounds.

For an index set I, let beta_I(X) = mu_Cap(t_I(X)) with mu_Cap the
C^1-extended cap measure. beta_I is continuously differentiable on the
(open) set of generic X, with

    grad_{x^(l)} beta_I = mu_Cap'(t_I) * t_I^2 * c_I^(tau(l)) * w_I   (l in I)
    grad_{x^(l)} beta_I = 0                                           (l not in I)

where c_I^j are the column sums of the Gram inverse and tau(l) is the rank
of l within the sorted I. Every partial is therefore a multiple of the cap
normal w_I. The generalized discrepancy is the pointwise maximum of the
smooth selection functions

    phi~_I^(1) = const - beta_I,      phi~_I^(2) = const + beta_I,

so it is locally Lipschitz with constant max over (I, s) of the Frobenius
norm of the stacked gradient. A coarser bound drops the t_I^2 factor and
bounds |mu_Cap'| by its maximum (1/2 for d = 3, C_d otherwise), leaving
just that maximum times max |c_I^j|. Both constants are reported.
"""

from dataclasses import dataclass

import numpy as np

from .capmeasure import (
    cap_measure_derivative,
    cap_measure_derivative_batch,
    cap_measure_extended,
    normalizing_constant,
)
from .discrepancy import _solve_gram_blocks, cap_params
from .errors import DimensionError
from .pointset import as_points, iter_index_blocks

#: Default step for central finite differences.
FD_STEP = 1e-6

_BLOCK_ROWS = 65536


@dataclass(frozen=True)
class GradientTable:
    """Partial gradients of beta_I = mu_Cap(t_I(.)) at one point set.

    Attributes
    ----------
    index_set : tuple of int
    t, w, c : cap parameters of I (see CapParams).
    rho : float
        mu_Cap'(t_I) * t_I^2; the partial for point l in I is
        rho * c[tau(l) - 1] * w.
    partials : dict
        Maps l in I to its gradient vector; points outside I have the
        zero gradient and are omitted.
    d, N : int
        Shape of the underlying point set.
    """

    index_set: tuple
    t: float
    w: np.ndarray
    c: np.ndarray
    rho: float
    partials: dict
    d: int
    N: int

    def partial(self, l):
        """Gradient with respect to x^(l); zero vector for l not in I."""
        if l in self.partials:
            return self.partials[l]
        if not 1 <= l <= self.N:
            raise ValueError(f"point index {l} out of range 1..{self.N}")
        return np.zeros(self.d)

    def as_matrix(self):
        """Stacked d x N gradient; column l-1 is partial(l)."""
        M = np.zeros((self.d, self.N))
        for l, vec in self.partials.items():
            M[:, l - 1] = vec
        return M

    def frobenius_norm(self):
        return abs(self.rho) * float(np.linalg.norm(self.c))


@dataclass(frozen=True)
class LipschitzEstimate:
    """Local and coarse Lipschitz constants of the generalized discrepancy.

    Attributes
    ----------
    L_exact : float
        max over (I, s) of the Frobenius norm of the stacked gradient of
        phi~_I^(s) at X; the norm is side independent, so this is
        max over I of |mu_Cap'(t_I)| * t_I^2 * ||c_I||_2.
    L_rough : float
        Coarse bound: (1/2 for d = 3, else C_d) times max |c_I^j|.
    argmax_index_set : tuple of int
        First index set attaining L_exact in enumeration order.
    per_index : list or None
        ((index_set, side, norm)) rows for every (I, s), when requested.
    """

    L_exact: float
    L_rough: float
    argmax_index_set: tuple
    per_index: object = None


def beta_gradient(X, index_set):
    """All partial gradients of beta_I at X.

    Branch structure of the derivative factor: for d = 3 it is -1/2 for
    every t_I (the extension is globally linear); for d >= 4 it vanishes
    when |t_I| >= 1 and equals -C_d (1 - t_I^2)^((d-3)/2) inside.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
        Generic; d >= 3.
    index_set : iterable of int

    Returns
    -------
    GradientTable
    """
    X = as_points(X)
    d, N = X.shape
    if d < 3:
        raise DimensionError(f"gradients require d >= 3, got d={d}")
    params = cap_params(X, index_set)
    t = params.t
    if d == 3:
        rho = -0.5 * t * t
    elif abs(t) >= 1.0:
        rho = 0.0
    else:
        rho = -normalizing_constant(d) * (1.0 - t * t) ** ((d - 3) / 2.0) * t * t
    partials = {
        l: rho * params.c[rank] * params.w
        for rank, l in enumerate(params.index_set)
    }
    return GradientTable(index_set=params.index_set, t=t, w=params.w,
                         c=params.c, rho=rho, partials=partials, d=d, N=N)


def phi_tilde_gradient(X, index_set, side):
    """Gradient table of the smooth selection function phi~_I^(side).

    Side 1 negates the beta gradient (the cap-measure term enters with a
    minus sign); side 2 keeps it.
    """
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    table = beta_gradient(X, index_set)
    if side == 2:
        return table
    return GradientTable(
        index_set=table.index_set, t=table.t, w=table.w, c=table.c,
        rho=-table.rho,
        partials={l: -v for l, v in table.partials.items()},
        d=table.d, N=table.N)


def lipschitz_estimate(X, family="phi", with_table=False):
    """Lipschitz constants of the generalized discrepancy at X.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
        Generic; d >= 3. Norms are unconstrained.
    family : str
        "phi" (sizes 1..d, the family defining the generalized
        discrepancy) or "phibar" (sizes 2..d).
    with_table : bool
        Also return the per-(I, s) gradient norms (2 sum_k C(N,k) rows).

    Returns
    -------
    LipschitzEstimate
    """
    X = as_points(X)
    d, N = X.shape
    if d < 3:
        raise DimensionError(
            f"Lipschitz estimation requires d >= 3, got d={d}")
    if family == "phi":
        min_size = 1
    elif family == "phibar":
        if N < 2:
            raise ValueError("family phibar needs N >= 2")
        min_size = 2
    else:
        raise ValueError(f"unknown family {family!r}")
    XT = np.ascontiguousarray(X.T)
    deriv_cap = 0.5 if d == 3 else normalizing_constant(d)

    best = -np.inf
    best_I = None
    max_abs_c = 0.0
    table = [] if with_table else None
    for k in range(min_size, min(d, N) + 1):
        for block in iter_index_blocks(N, k, _BLOCK_ROWS):
            t, _, z = _solve_gram_blocks(XT, block)
            rho = cap_measure_derivative_batch(t, d) * t * t
            norms = np.abs(rho) * np.linalg.norm(z, axis=1)
            r = int(np.argmax(norms))
            if norms[r] > best:
                best = float(norms[r])
                best_I = tuple(int(i) + 1 for i in block[r])
            max_abs_c = max(max_abs_c, float(np.abs(z).max()))
            if with_table:
                for row in range(len(block)):
                    I = tuple(int(i) + 1 for i in block[row])
                    table.append((I, 1, float(norms[row])))
                    table.append((I, 2, float(norms[row])))
    return LipschitzEstimate(
        L_exact=best,
        L_rough=deriv_cap * max_abs_c,
        argmax_index_set=best_I,
        per_index=table)


def finite_difference_check(X, index_set, h=FD_STEP):
    """Worst deviation of central differences from the analytic gradient.

    beta_I is evaluated through the cap parameters at coordinatewise
    perturbations X +- h e_{il}; the deviation is scaled by the largest
    analytic partial, so the returned number is a relative error even for
    the identically-zero partials of points outside I.

    Parameters
    ----------
    X : PointSet or array_like, shape (d, N)
    index_set : iterable of int
    h : float
        Central difference step, default 1e-6. For d >= 4 keep |t_I|
        away from 1 (within 1e-3) or the kink of the extension degrades
        the approximation.

    Returns
    -------
    float
    """
    X = np.array(as_points(X), copy=True)
    d, N = X.shape
    table = beta_gradient(X, index_set)
    analytic = table.as_matrix()
    scale = max(float(np.abs(analytic).max()), 1e-12)

    def beta(Y):
        return cap_measure_extended(cap_params(Y, index_set).t, d)

    worst = 0.0
    for l in range(N):
        for i in range(d):
            orig = X[i, l]
            X[i, l] = orig + h
            up = beta(X)
            X[i, l] = orig - h
            down = beta(X)
            X[i, l] = orig
            fd = (up - down) / (2.0 * h)
            worst = max(worst, abs(fd - analytic[i, l]) / scale)
    return worst
