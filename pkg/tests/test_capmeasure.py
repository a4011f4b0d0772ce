import concurrent.futures
import math

import numpy as np
import pytest
import scipy.integrate

from capdisc.capmeasure import (
    cap_measure,
    cap_measure_batch,
    cap_measure_derivative,
    cap_measure_derivative_batch,
    cap_measure_extended,
    cap_measure_extended_batch,
    normalizing_constant,
)
from capdisc.errors import DimensionError


def test_normalizing_constants():
    assert normalizing_constant(2) == pytest.approx(1.0 / math.pi, abs=1e-14)
    assert normalizing_constant(3) == pytest.approx(0.5, abs=1e-14)
    assert normalizing_constant(4) == pytest.approx(2.0 / math.pi, abs=1e-14)
    assert normalizing_constant(5) == pytest.approx(0.75, abs=1e-14)


def test_normalizing_constant_matches_independent_quadrature():
    for d in range(2, 9):
        total, _ = scipy.integrate.quad(
            lambda tau: math.sin(tau) ** (d - 2), 0.0, math.pi)
        assert normalizing_constant(d) == pytest.approx(1.0 / total,
                                                        rel=1e-12)


def test_normalizing_constant_rejects_low_dimension():
    with pytest.raises(ValueError):
        normalizing_constant(1)


def test_concurrent_first_access_is_consistent():
    d = 11
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        values = list(pool.map(normalizing_constant, [d] * 32))
    assert len(set(values)) == 1


def test_d3_closed_form_on_grid():
    t = np.linspace(-1.0, 1.0, 10_000)
    dev = np.abs(cap_measure_batch(t, 3) - (1.0 - t) / 2.0)
    assert dev.max() <= 1e-14
    for ti in t[::997]:
        assert abs(cap_measure(float(ti), 3) - (1.0 - ti) / 2.0) <= 1e-14


def test_point_values():
    assert cap_measure(0.0, 5) == pytest.approx(0.5, abs=1e-13)
    assert cap_measure(1.0, 4) == 0.0
    assert cap_measure(-1.0, 4) == 1.0
    assert cap_measure(0.5, 3) == 0.25
    # (2/pi) * (pi/6 - sin(2*pi/3)/4) by hand
    assert cap_measure(0.5, 4) == pytest.approx(0.19550110947788535,
                                                abs=1e-13)


def test_agrees_with_independent_quadrature():
    for d in (2, 4, 5, 6, 7):
        C = normalizing_constant(d)
        for t in np.linspace(-0.99, 0.99, 21):
            ref, _ = scipy.integrate.quad(
                lambda tau: math.sin(tau) ** (d - 2), 0.0, math.acos(t))
            assert cap_measure(float(t), d) == pytest.approx(C * ref,
                                                             abs=1e-12)


def test_domain_error_outside_unit_interval():
    with pytest.raises(ValueError):
        cap_measure(1.2, 3)
    with pytest.raises(ValueError):
        cap_measure(-1.0000001, 4)


def test_extension_values():
    assert cap_measure_extended(0.3, 4) == pytest.approx(cap_measure(0.3, 4),
                                                         abs=1e-15)
    assert cap_measure_extended(2.0, 3) == -0.5
    assert cap_measure_extended(2.0, 4) == 0.0
    assert cap_measure_extended(-2.0, 5) == 1.0


def test_extension_rejects_d2():
    with pytest.raises(DimensionError):
        cap_measure_extended(0.5, 2)
    with pytest.raises(DimensionError):
        cap_measure_derivative(0.5, 2)


def test_complement_identity():
    t = np.linspace(-1.0, 1.0, 2001)
    for d in range(2, 7):
        dev = np.abs(cap_measure_batch(t, d) + cap_measure_batch(-t, d) - 1.0)
        assert dev.max() <= 1e-12


def test_extended_complement_identity():
    t = np.linspace(-3.0, 3.0, 2001)
    for d in (3, 4, 5):
        dev = np.abs(cap_measure_extended_batch(t, d)
                     + cap_measure_extended_batch(-t, d) - 1.0)
        assert dev.max() <= 1e-12


def test_monotone_nonincreasing():
    t = np.linspace(-3.0, 3.0, 4001)
    for d in (3, 4, 5, 6):
        v = cap_measure_extended_batch(t, d)
        assert (np.diff(v) <= 1e-15).all()


def test_derivative_values():
    assert cap_measure_derivative(0.7, 3) == -0.5
    assert cap_measure_derivative(1.5, 4) == 0.0
    assert cap_measure_derivative(0.0, 4) == pytest.approx(-2.0 / math.pi,
                                                           abs=1e-13)


def test_derivative_continuous_at_boundary():
    # the C1 extension forces the derivative to vanish at |t|=1 for d>=4
    for d in (4, 5, 6):
        assert abs(cap_measure_derivative(1.0, d)) == 0.0
        assert abs(cap_measure_derivative(1.0 - 1e-9, d)) <= 1e-4
    assert cap_measure_derivative(1.0, 3) == -0.5
    assert cap_measure_derivative(-1.0, 3) == -0.5


def test_derivative_matches_finite_differences():
    h = 1e-6
    for d in (3, 4, 5, 6):
        for t in np.linspace(-0.997, 0.997, 41):
            t = float(t)
            fd = (cap_measure_extended(t + h, d)
                  - cap_measure_extended(t - h, d)) / (2 * h)
            an = cap_measure_derivative(t, d)
            assert fd == pytest.approx(an, rel=1e-6, abs=1e-9)


def test_batch_matches_scalar():
    rng = np.random.default_rng(5)
    t = rng.uniform(-1.0, 1.0, 200)
    for d in range(2, 8):
        batch = cap_measure_batch(t, d)
        scalars = np.array([cap_measure(float(ti), d) for ti in t])
        np.testing.assert_allclose(batch, scalars, atol=1e-13, rtol=0)


def test_extended_and_derivative_batch_match_scalar():
    rng = np.random.default_rng(6)
    t = rng.uniform(-2.5, 2.5, 200)
    for d in (3, 4, 5, 6):
        np.testing.assert_allclose(
            cap_measure_extended_batch(t, d),
            [cap_measure_extended(float(ti), d) for ti in t],
            atol=1e-13, rtol=0)
        np.testing.assert_allclose(
            cap_measure_derivative_batch(t, d),
            [cap_measure_derivative(float(ti), d) for ti in t],
            atol=1e-13, rtol=0)


def test_values_stay_in_unit_interval_inside_domain():
    t = np.linspace(-1.0, 1.0, 1001)
    for d in (2, 3, 4, 5, 6, 7):
        v = cap_measure_batch(t, d)
        assert v.min() >= -1e-15 and v.max() <= 1.0 + 1e-15
