import numpy as np
import pytest

from landau import KernelParams, a_matrix, b_drift, sigma, trace_a


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_params_validation():
    KernelParams(0.0, 1e-4)  # Maxwell molecules admitted
    KernelParams(-2.9, 1e-8)
    with pytest.raises(ValueError):
        KernelParams(-3.0, 1e-4)
    with pytest.raises(ValueError):
        KernelParams(0.5, 1e-4)
    with pytest.raises(ValueError):
        KernelParams(-1.0, 0.0)


def test_a_matrix_examples():
    kp = KernelParams(-1.0, 1e-8)
    assert np.allclose(a_matrix([1, 0, 0], kp), np.diag([0.0, 1.0, 1.0]), atol=1e-15)
    assert np.array_equal(a_matrix([0, 0, 0], kp), np.zeros((3, 3)))
    kp2 = KernelParams(-2.0, 1e-8)
    expected = np.array([[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
    assert np.allclose(a_matrix([1, 1, 0], kp2), expected, atol=1e-15)


def test_b_drift_examples():
    kp = KernelParams(-1.0, 1e-8)
    assert np.allclose(b_drift([2, 0, 0], kp), [-2.0, 0.0, 0.0], atol=1e-15)
    assert np.array_equal(b_drift([0, 0, 0], kp), np.zeros(3))
    kp2 = KernelParams(-2.0, 1e-8)
    assert np.allclose(b_drift([1, 1, 0], kp2), [-1.0, -1.0, 0.0], atol=1e-15)


def test_sigma_example():
    kp = KernelParams(-1.0, 1e-8)
    s = sigma([1, 0, 0], kp)
    assert np.allclose(s, [[0, 0, 0], [-1, 0, 0], [0, 1, 0]], atol=1e-15)
    assert np.allclose(s @ s.T, np.diag([0.0, 1.0, 1.0]), atol=1e-15)
    assert np.array_equal(sigma([0, 0, 0], kp), np.zeros((3, 3)))


def test_trace_examples():
    assert trace_a([1, 0, 0], KernelParams(-1.0, 1e-8)) == pytest.approx(2.0, abs=1e-14)
    assert trace_a([0, 0, 0], KernelParams(-1.0, 1e-8)) == 0.0
    assert trace_a([2, 0, 0], KernelParams(-2.0, 1e-8)) == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("gamma", [-0.5, -1.0, -2.0, -2.9])
def test_sqrt_identity_and_null_direction(rng, gamma):
    kp = KernelParams(gamma, 1e-8)
    z = rng.normal(size=(400, 3))
    z *= rng.uniform(kp.eps, 10.0, size=(400, 1)) / np.linalg.norm(z, axis=1, keepdims=True)
    a = a_matrix(z, kp)
    s = sigma(z, kp)
    assert np.max(np.abs(s @ s.transpose(0, 2, 1) - a)) <= 1e-12
    az = np.einsum("nij,nj->ni", a, z)
    norms = np.linalg.norm(a.reshape(-1, 9), axis=1) * np.linalg.norm(z, axis=1)
    assert np.all(np.linalg.norm(az, axis=1) <= 1e-12 * norms)
    assert np.min(np.linalg.eigvalsh(a)) >= -1e-12
    assert np.allclose(np.trace(a, axis1=1, axis2=2), trace_a(z, kp), rtol=1e-13)


def test_trace_matches_matrix_inside_floor():
    # within |z| < eps the floored radial factor applies to both
    kp = KernelParams(-1.0, eps=0.5)
    z = np.array([0.1, 0.05, -0.02])
    assert np.trace(a_matrix(z, kp)) == pytest.approx(trace_a(z, kp), rel=1e-13)


def test_parity_exact(rng):
    kp = KernelParams(-1.5, 1e-6)
    z = rng.normal(size=(200, 3))
    assert np.array_equal(b_drift(-z, kp), -b_drift(z, kp))
    assert np.array_equal(a_matrix(-z, kp), a_matrix(z, kp))


@pytest.mark.parametrize("gamma", [-0.5, -1.0, -2.0, -2.9])
def test_lipschitz_bounds(rng, gamma):
    kp = KernelParams(gamma, 1e-8)
    n = 20_000
    z1 = rng.normal(size=(n, 3))
    z1 *= rng.uniform(kp.eps, 10.0, size=(n, 1)) / np.linalg.norm(z1, axis=1, keepdims=True)
    z2 = rng.normal(size=(n, 3))
    z2 *= rng.uniform(kp.eps, 10.0, size=(n, 1)) / np.linalg.norm(z2, axis=1, keepdims=True)
    r1 = np.linalg.norm(z1, axis=1)
    r2 = np.linalg.norm(z2, axis=1)
    dz = np.linalg.norm(z1 - z2, axis=1)
    ds = np.linalg.norm((sigma(z1, kp) - sigma(z2, kp)).reshape(-1, 9), axis=1)
    bound_s = (abs(gamma) / 2 + 1) * dz * (r1 ** (gamma / 2) + r2 ** (gamma / 2))
    assert np.all(ds <= bound_s * (1 + 1e-12))
    db = np.linalg.norm(b_drift(z1, kp) - b_drift(z2, kp), axis=1)
    bound_b = 2 * (abs(gamma) + 1) * dz * (r1**gamma + r2**gamma)
    assert np.all(db <= bound_b * (1 + 1e-12))


def test_regularization_floor_active_below_eps():
    kp = KernelParams(-1.0, eps=1.0)
    shrunk = a_matrix([0.5, 0, 0], kp)  # radial factor floored at 1**gamma = 1
    assert np.allclose(shrunk, np.diag([0.0, 0.25, 0.25]), atol=1e-15)
