import math
from fractions import Fraction

import numpy as np
import pytest

from capdisc.capmeasure import cap_measure
from capdisc.discrepancy import (
    EPS_COUNT,
    cap_params,
    discrepancy,
    empirical_measure,
    generalized_discrepancy,
    local_discrepancy,
)
from capdisc.errors import DegeneracyError, DimensionError, NormalizationError
from capdisc.pointset import PointSet, enumerate_index_sets
from conftest import brute_force_discrepancy, random_generic

SQ2 = math.sqrt(2.0)


def test_empirical_measure_examples():
    X = PointSet(np.eye(3))
    assert empirical_measure(X, np.array([1.0, 0, 0]), 0.5) == Fraction(1, 3)
    assert empirical_measure(X, np.zeros(3), -1.0) == 1
    pair = PointSet(np.eye(3)[:, :2])
    w = np.array([1.0, 1.0, 0.0]) / SQ2
    assert empirical_measure(pair, w, 1 / SQ2) == 1


def test_empirical_measure_is_exact_rational():
    X = random_generic(3, 7, 0)
    v = empirical_measure(X, X.X[:, 0], 0.2)
    assert isinstance(v, Fraction)
    assert v.denominator in {1, 7}


def test_empirical_measure_eps_errs_toward_inclusion():
    X = PointSet(np.eye(3)[:, :2])
    w = np.array([1.0, 0.0, 0.0])
    # the boundary point sits within eps of the threshold
    assert empirical_measure(X, w, 1.0 + 0.5 * EPS_COUNT) == Fraction(1, 2)
    assert empirical_measure(X, w, 1.0 + 2.0 * EPS_COUNT) == 0


def test_complement_bookkeeping_exact():
    X = PointSet(np.eye(3)[:, :2])
    w = np.array([1.0, 0.0, 0.0])
    a = empirical_measure(X, w, 1.0)
    b = empirical_measure(X, -w, -1.0)
    assert a + b == 1 + Fraction(1, 2)  # one boundary point

    rng = np.random.default_rng(3)
    Y = random_generic(4, 9, 1)
    for _ in range(25):
        w = rng.standard_normal(4)
        t = float(rng.uniform(-1, 1))
        boundary = int((np.abs(w @ Y.X - t) <= EPS_COUNT).sum())
        total = empirical_measure(Y, w, t) + empirical_measure(Y, -w, -t)
        assert total == 1 + Fraction(boundary, 9)


def test_cap_params_orthogonal_pair(two_points):
    p = cap_params(two_points, (1, 2))
    assert p.t == pytest.approx(1 / SQ2, abs=1e-15)
    np.testing.assert_allclose(p.w, [1 / SQ2, 1 / SQ2, 0.0], atol=1e-15)
    np.testing.assert_allclose(p.c, [1.0, 1.0], atol=1e-14)


def test_cap_params_singleton_on_sphere():
    X = random_generic(4, 5, 7)
    for l in range(1, 6):
        p = cap_params(X, (l,))
        assert p.t == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(p.w, X.X[:, l - 1], atol=1e-12)


def test_cap_params_invariants_random():
    for d, seed in ((3, 0), (4, 1), (5, 2)):
        X = random_generic(d, 10, seed)
        for I in enumerate_index_sets(10, d, min_size=1):
            p = cap_params(X, I)
            assert p.t > 0.0
            assert p.t <= 1.0 + 1e-12
            assert abs(np.linalg.norm(p.w) - 1.0) <= 1e-10
            XI = X.X[:, [i - 1 for i in I]]
            np.testing.assert_allclose(XI.T @ p.w, p.t, atol=1e-10)


def test_cap_params_degenerate_pair_names_subset():
    X = np.eye(3)[:, [0, 0, 1]]
    with pytest.raises(DegeneracyError) as exc:
        cap_params(PointSet(X), (1, 2))
    assert exc.value.index_set == (1, 2)


def test_cap_params_index_validation(two_points):
    for bad in ((), (1, 1), (0, 1), (1, 2, 3), (3,)):
        with pytest.raises(ValueError):
            cap_params(two_points, bad)


def test_index_expansion_keeps_cap(two_points):
    # a third point placed on the pair's cap boundary leaves (w, t) fixed
    x3 = np.array([0.5, 0.5, 1 / SQ2])
    p2 = cap_params(two_points, (1, 2))
    assert abs(x3 @ p2.w - p2.t) <= 1e-15
    X = PointSet(np.column_stack([two_points.X, x3]))
    p3 = cap_params(X, (1, 2, 3))
    assert p3.t == pytest.approx(p2.t, abs=1e-10)
    np.testing.assert_allclose(p3.w, p2.w, atol=1e-10)


def test_local_discrepancy_examples(two_points):
    ld = local_discrepancy(two_points, (1, 2), 1)
    assert ld.emp == 1
    assert ld.cap == pytest.approx((1 - 1 / SQ2) / 2, abs=1e-15)
    assert ld.value == pytest.approx(0.8535533905932737, abs=1e-15)

    ld2 = local_discrepancy(two_points, (1, 2), 2)
    assert ld2.emp == 1
    assert ld2.value == pytest.approx((1 - 1 / SQ2) / 2, abs=1e-15)

    ld3 = local_discrepancy(two_points, (1,), 2)
    assert ld3.emp == 1 and ld3.cap == 1.0 and ld3.value == 0.0


def test_discrepancy_orthogonal_pair(two_points):
    res = discrepancy(two_points)
    assert res.value == pytest.approx((1 + 1 / SQ2) / 2, abs=1e-15)
    assert res.index_set == (1, 2) and res.side == 1
    assert res.family == "phibar"
    assert res.n_subsets == 1


def test_discrepancy_single_point():
    X = PointSet(np.eye(3)[:, :1])
    res = discrepancy(X, family="phi")
    assert res.value == 1.0
    assert res.index_set == (1,) and res.side == 1


def test_discrepancy_lower_bound_small_sets():
    for d, seed in ((3, 0), (4, 1), (5, 2)):
        for N in (d, d + 3, 12):
            X = random_generic(d, N, seed + 100 * N)
            assert discrepancy(X).value >= min(d, N) / (2 * N) - 1e-12


def test_engine_matches_brute_force():
    for d, N, seed in ((3, 6, 0), (3, 8, 1), (4, 7, 2), (5, 8, 3), (2, 6, 4)):
        X = random_generic(d, N, seed)
        res = discrepancy(X, family="phi")
        ref = brute_force_discrepancy(X, min_size=1)
        assert res.value == pytest.approx(ref.value, abs=1e-13)
        assert res.index_set == ref.index_set and res.side == ref.side
        assert res.n_subsets == sum(
            math.comb(N, k) for k in range(1, min(d, N) + 1))


def test_family_equivalence_on_sphere():
    for d, N, seed in ((2, 5, 0), (3, 9, 1), (4, 6, 2), (5, 7, 3)):
        X = random_generic(d, N, seed)
        a = discrepancy(X, family="phi")
        b = discrepancy(X, family="phibar")
        assert abs(a.value - b.value) <= 1e-12


def test_locals_table(two_points):
    res = discrepancy(two_points, family="phi", with_locals=True)
    assert len(res.locals) == 2 * res.n_subsets == 6
    assert max(ld.value for ld in res.locals) == res.value
    keys = [(len(ld.index_set), ld.index_set, ld.side) for ld in res.locals]
    assert keys == sorted(keys)
    for ld in res.locals:
        assert ld.value == float(ld.emp) - ld.cap
        ref = local_discrepancy(two_points, ld.index_set, ld.side)
        assert ld.value == pytest.approx(ref.value, abs=1e-13)
        assert ld.emp == ref.emp


def test_witness_boundary_and_strict_dominance():
    for d, N, seed in ((3, 10, 0), (4, 8, 1), (5, 9, 2)):
        X = random_generic(d, N, seed)
        res = discrepancy(X)
        sign = 1.0 if res.side == 1 else -1.0
        proj = (sign * res.w) @ X.X
        assert np.abs(proj - sign * res.t).min() <= 1e-10
        assert float(res.emp) - res.cap > 1e-12
        assert 0.0 < res.value <= 1.0


def test_value_in_unit_interval_many_seeds():
    for seed in range(20):
        X = random_generic(3, 12, seed)
        v = discrepancy(X).value
        assert 0.0 < v <= 1.0


def test_off_sphere_rejected():
    X = PointSet(1.1 * np.eye(3))
    with pytest.raises(NormalizationError):
        discrepancy(X)


def test_engine_degeneracy_names_first_subset():
    A = np.asarray(random_generic(3, 5, 6).X).copy()
    A[:, 1] = A[:, 0]
    with pytest.raises(DegeneracyError) as exc:
        discrepancy(PointSet(A))
    assert exc.value.index_set == (1, 2)


def test_threads_bitwise_identical(monkeypatch):
    import importlib
    mod = importlib.import_module("capdisc.discrepancy")
    monkeypatch.setattr(mod.os, "cpu_count", lambda: 4)
    X = random_generic(3, 16, 8)
    a = discrepancy(X, threads=1, with_locals=True)
    b = discrepancy(X, threads=4, with_locals=True)
    assert a.value == b.value
    assert a.index_set == b.index_set and a.side == b.side
    assert np.array_equal(a.w, b.w) and a.t == b.t
    assert [ld.value for ld in a.locals] == [ld.value for ld in b.locals]


def test_generalized_equals_plain_on_sphere():
    for d, N, seed in ((3, 8, 0), (4, 7, 1), (5, 6, 2)):
        X = random_generic(d, N, seed)
        lam = generalized_discrepancy(X)
        delta = discrepancy(X, family="phi")
        assert abs(lam.value - delta.value) <= 1e-12
        assert lam.index_set == delta.index_set and lam.side == delta.side


def test_generalized_scaled_pair():
    X = PointSet(1.1 * np.eye(3)[:, :2])
    res = generalized_discrepancy(X)
    assert res.value == pytest.approx(0.5 + 1.1 / (2 * SQ2), abs=1e-12)
    assert res.index_set == (1, 2) and res.side == 1
    assert res.t == pytest.approx(1.1 / SQ2, abs=1e-13)

    # the scaled singleton engages the d=3 linear extension: t = 1.1 > 1
    ld = local_discrepancy(X, (1,), 1)
    assert ld.value == pytest.approx(0.55, abs=1e-13)


def test_generalized_rejects_d2():
    X = random_generic(2, 5, 3)
    with pytest.raises(DimensionError):
        generalized_discrepancy(X)


def test_near_sphere_projection_consistency():
    # pulling slightly off-sphere points back changes the value by at
    # most the estimated Lipschitz constant times the distance
    from capdisc.smooth import lipschitz_estimate

    rng = np.random.default_rng(12)
    failures = 0
    for trial in range(100):
        X = random_generic(3, 6, 200 + trial)
        A = np.asarray(X.X) * (1.0 + rng.uniform(-1e-6, 1e-6, 6))
        Y = PointSet(A)
        lam_off = generalized_discrepancy(Y).value
        lam_on = generalized_discrepancy(X).value
        L = max(lipschitz_estimate(Y).L_exact,
                lipschitz_estimate(X).L_exact)
        gap = np.linalg.norm(A - X.X)
        if abs(lam_off - lam_on) > 1.01 * L * gap + 1e-12:
            failures += 1
    assert failures <= 1


def test_d2_discrepancy_matches_oracle():
    from capdisc.oracle import oracle_discrepancy

    angles = np.array([0.3, 1.1, 2.0, 4.5])
    X = PointSet(np.vstack([np.cos(angles), np.sin(angles)]))
    exact = discrepancy(X)
    probe = oracle_discrepancy(X, 500, seed=0)
    assert probe.value <= exact.value + 1e-9
    # pair caps realize the maximum on the circle, so the oracle is sharp
    assert probe.value == pytest.approx(exact.value, abs=1e-12)
