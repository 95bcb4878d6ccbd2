import numpy as np
import pytest

from landau import CouplingPlan, Ensemble, plan_cost, w2_bruteforce, w2_exact


def ens(arr):
    return Ensemble(np.asarray(arr, dtype=float))


def random_pair(rng, n):
    return ens(rng.normal(size=(n, 3))), ens(rng.normal(size=(n, 3)))


def test_plan_validation():
    CouplingPlan(np.array([1, 0, 2]), 0.5)
    with pytest.raises(ValueError):
        CouplingPlan(np.array([0, 0, 2]), 0.5)
    ident = CouplingPlan.identity(4)
    assert np.array_equal(ident.permutation, np.arange(4))
    assert ident.cost == 0.0


def test_identical_ensembles():
    rng = np.random.default_rng(0)
    a, _ = random_pair(rng, 16)
    plan = w2_exact(a, a)
    assert plan.cost == 0.0
    assert np.array_equal(plan.permutation, np.arange(16))


def test_pure_translation():
    rng = np.random.default_rng(1)
    a, _ = random_pair(rng, 32)
    delta = np.array([0.3, -0.1, 0.7])
    b = ens(a.velocities + delta)
    plan = w2_exact(a, b)
    assert np.array_equal(plan.permutation, np.arange(32))
    assert plan.cost == pytest.approx(np.dot(delta, delta), rel=1e-14)


def test_two_point_example():
    a = ens([[0, 0, 0], [1, 0, 0]])
    b = ens([[1.1, 0, 0], [0.1, 0, 0]])
    plan = w2_exact(a, b)
    assert np.array_equal(plan.permutation, [1, 0])
    assert plan.cost == pytest.approx(0.01, rel=1e-12)


def test_size_mismatch():
    a = ens(np.zeros((3, 3)))
    b = ens(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        w2_exact(a, b)
    with pytest.raises(ValueError):
        plan_cost(CouplingPlan.identity(3), a, b)


def test_bruteforce_size_cap():
    rng = np.random.default_rng(2)
    a, b = random_pair(rng, 9)
    with pytest.raises(ValueError):
        w2_bruteforce(a, b)


def test_exact_matches_bruteforce():
    rng = np.random.default_rng(3)
    for trial in range(100):
        n = int(rng.integers(2, 8))
        a, b = random_pair(rng, n)
        fast = w2_exact(a, b)
        slow = w2_bruteforce(a, b)
        # equal optimal cost is required bit for bit; the permutation itself
        # may differ when the optimum is degenerate
        assert fast.cost == slow.cost
        assert plan_cost(fast, a, b) == pytest.approx(fast.cost, rel=1e-14)


def test_plan_cost_upper_bounds_optimum():
    rng = np.random.default_rng(4)
    a, b = random_pair(rng, 12)
    opt = w2_exact(a, b)
    for _ in range(20):
        perm = rng.permutation(12)
        assert plan_cost(CouplingPlan(perm, 0.0), a, b) >= opt.cost - 1e-14


def test_metric_sanity():
    rng = np.random.default_rng(5)
    a, b = random_pair(rng, 16)
    c = ens(rng.normal(size=(16, 3)))
    dab = np.sqrt(w2_exact(a, b).cost)
    dba = np.sqrt(w2_exact(b, a).cost)
    assert dab == pytest.approx(dba, rel=1e-12)
    dac = np.sqrt(w2_exact(a, c).cost)
    dcb = np.sqrt(w2_exact(c, b).cost)
    assert dab <= dac + dcb + 1e-12
    assert w2_exact(a, a).cost == 0.0


def test_translation_lower_bound():
    # W2^2 >= |mean(a) - mean(b)|^2 always
    rng = np.random.default_rng(6)
    a, b = random_pair(rng, 24)
    gap = a.velocities.mean(axis=0) - b.velocities.mean(axis=0)
    assert w2_exact(a, b).cost >= np.dot(gap, gap) - 1e-12
