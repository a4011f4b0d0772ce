"""Normalized surface measure of spherical caps and its smooth extension.

A spherical cap with unit normal w and height t is the set
{x in S^{d-1} : <w, x> >= t}. Its normalized surface measure depends on t
only:

    mu_cap(t) = C_d * integral_0^{arccos(t)} sin(tau)^(d-2) dtau,

where C_d = 1 / integral_0^pi sin(tau)^(d-2) dtau makes mu_cap(-1) = 1.
For d = 3 this collapses to the linear form (1 - t) / 2.

The cap measure is only defined for t in [-1, 1]. Off-sphere point sets
produce cap heights outside that interval, so a C^1 extension to the whole
real line is provided: for d = 3 the linear form already extends, while for
d >= 4 the measure is continued by the constants 0 (t > 1) and 1 (t < -1),
which match value and derivative at the endpoints. No such extension exists
for d = 2 because the derivative of mu_cap blows up at t = +-1.

Scalar evaluation integrates sin^(d-2) by adaptive Gauss-Legendre panels.
Vectorized evaluation uses the closed-form antiderivative recurrence

    J_m(t) = (-t * (1-t^2)^((m-1)/2) + (m-1) * J_{m-2}(t)) / m,
    J_0(t) = arccos(t),   J_1(t) = 1 - t,

with J_m(t) = integral_0^{arccos(t)} sin^m; both routes agree to 1e-13 and
are tested against each other.
"""

from functools import lru_cache
import math

import numpy as np

from .errors import DimensionError

#: Absolute tolerance targeted by the adaptive quadrature backend.
QUAD_TOL = 1e-13

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


@lru_cache(maxsize=None)
def normalizing_constant(d):
    """Constant C_d = 1 / integral_0^pi sin(tau)^(d-2) dtau.

    Computed exactly by the Wallis recurrence
    W_0 = pi, W_1 = 2, W_m = (m-1)/m * W_{m-2}, giving C_d = 1 / W_{d-2}.
    Memoized; safe under concurrent first access.

    Parameters
    ----------
    d : int
        Ambient dimension, d >= 2.

    Returns
    -------
    float
    """
    d = int(d)
    if d < 2:
        raise DimensionError(f"normalizing_constant requires d >= 2, got d={d}")
    m = d - 2
    if m % 2 == 0:
        w = math.pi
        start = 2
    else:
        w = 2.0
        start = 3
    for j in range(start, m + 1, 2):
        w *= (j - 1) / j
    return 1.0 / w


def _sinpow(m):
    def f(tau):
        s = np.sin(tau)
        return s ** m if m > 0 else np.ones_like(s)

    return f


def _gauss_legendre(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def _adaptive_integral(f, a, b, tol):
    # bisect until the two-panel refinement agrees with the single panel
    whole = _gauss_legendre(f, a, b)
    mid = 0.5 * (a + b)
    left = _gauss_legendre(f, a, mid)
    right = _gauss_legendre(f, mid, b)
    if abs(whole - (left + right)) <= tol or (b - a) < 1e-10:
        return left + right
    return (_adaptive_integral(f, a, mid, 0.5 * tol)
            + _adaptive_integral(f, mid, b, 0.5 * tol))


def cap_measure(t, d):
    """Normalized measure of the cap {x in S^{d-1} : <w, x> >= t}.

    Parameters
    ----------
    t : float
        Cap height, must lie in [-1, 1].
    d : int
        Ambient dimension, d >= 2.

    Returns
    -------
    float
        A probability in [0, 1], non-increasing in t.
    """
    d = int(d)
    if d < 2:
        raise DimensionError(f"cap_measure requires d >= 2, got d={d}")
    t = float(t)
    if not -1.0 <= t <= 1.0:
        raise ValueError(
            f"cap height t={t} outside [-1, 1]; use cap_measure_extended")
    if d == 3:
        return 0.5 * (1.0 - t)
    if t < 0.0:
        # reflecting keeps the integration interval short and makes the
        # complement identity exact
        return 1.0 - cap_measure(-t, d)
    theta = math.acos(t)
    if theta == 0.0:
        return 0.0
    val = normalizing_constant(d) * _adaptive_integral(
        _sinpow(d - 2), 0.0, theta, QUAD_TOL)
    return min(max(val, 0.0), 1.0)


def cap_measure_batch(t, d):
    """Vectorized cap measure on [-1, 1] via the antiderivative recurrence.

    Parameters
    ----------
    t : array_like
        Cap heights in [-1, 1] (values are clipped to the interval for
        roundoff robustness; callers must not pass genuinely exterior t).
    d : int
        Ambient dimension, d >= 2.

    Returns
    -------
    ndarray
    """
    d = int(d)
    if d < 2:
        raise DimensionError(f"cap_measure_batch requires d >= 2, got d={d}")
    t = np.asarray(t, dtype=float)
    if d == 3:
        return 0.5 * (1.0 - t)
    ta = np.clip(np.abs(t), 0.0, 1.0)
    val = normalizing_constant(d) * _sinpow_primitive(d - 2, ta)
    return np.where(t < 0.0, 1.0 - val, val)


def _sinpow_primitive(m, t):
    """integral_0^{arccos(t)} sin(tau)^m dtau for t in [0, 1], vectorized."""
    if m == 0:
        return np.arccos(t)
    if m == 1:
        return 1.0 - t
    u = np.clip(1.0 - t * t, 0.0, None)   # sin^2 at the endpoint
    prev = _sinpow_primitive(m - 2, t)
    return (-t * u ** ((m - 1) / 2.0) + (m - 1) * prev) / m


def cap_measure_extended(t, d):
    """C^1 extension of the cap measure to all real cap heights.

    Equals cap_measure on [-1, 1]. Outside: the linear form -t/2 + 1/2 for
    d = 3, the constants 0 (t > 1) and 1 (t < -1) for d >= 4.

    Parameters
    ----------
    t : float
    d : int
        Ambient dimension, d >= 3 (no C^1 extension exists for d = 2).

    Returns
    -------
    float
    """
    d = int(d)
    if d < 3:
        raise DimensionError(
            f"cap_measure_extended requires d >= 3, got d={d}")
    t = float(t)
    if d == 3:
        return 0.5 * (1.0 - t)
    if t > 1.0:
        return 0.0
    if t < -1.0:
        return 1.0
    return cap_measure(t, d)


def cap_measure_extended_batch(t, d):
    """Vectorized counterpart of cap_measure_extended."""
    d = int(d)
    if d < 3:
        raise DimensionError(
            f"cap_measure_extended_batch requires d >= 3, got d={d}")
    t = np.asarray(t, dtype=float)
    if d == 3:
        return 0.5 * (1.0 - t)
    inner = cap_measure_batch(np.clip(t, -1.0, 1.0), d)
    return np.where(t > 1.0, 0.0, np.where(t < -1.0, 1.0, inner))


def cap_measure_derivative(t, d):
    """Derivative of the extended cap measure.

    -1/2 everywhere for d = 3; for d >= 4 it is
    -C_d * (1 - t^2)^((d-3)/2) on (-1, 1) and 0 for |t| >= 1, which is
    continuous because the power vanishes at the endpoints.

    Parameters
    ----------
    t : float
    d : int
        Ambient dimension, d >= 3.

    Returns
    -------
    float
    """
    d = int(d)
    if d < 3:
        raise DimensionError(
            f"cap_measure_derivative requires d >= 3, got d={d}")
    t = float(t)
    if d == 3:
        return -0.5
    if abs(t) >= 1.0:
        return 0.0
    return -normalizing_constant(d) * (1.0 - t * t) ** ((d - 3) / 2.0)


def cap_measure_derivative_batch(t, d):
    """Vectorized counterpart of cap_measure_derivative."""
    d = int(d)
    if d < 3:
        raise DimensionError(
            f"cap_measure_derivative_batch requires d >= 3, got d={d}")
    t = np.asarray(t, dtype=float)
    if d == 3:
        return np.full_like(t, -0.5)
    u = np.clip(1.0 - t * t, 0.0, None)
    return -normalizing_constant(d) * u ** ((d - 3) / 2.0)
