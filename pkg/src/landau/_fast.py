"""Numba inner loops for the O(N^2) pairwise sums.

All loops are written so that each output element is accumulated by a
single sequential inner loop in a fixed order; results are therefore
bit-stable regardless of how the outer loop is scheduled.

The kernels use the IEEE error model: overflow at extreme states yields
inf/nan velocities, which the stepper turns into a clean blow-up abort.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "pairwise_drift",
    "diffusion_increment",
    "step_inplace",
    "jgamma_rows",
    "loo_kde_values",
]


@njit(cache=True, inline="always", error_model="numpy")
def _pow_gamma(r, gamma):
    """r**gamma for r > 0, with sqrt chains for the common half-integers."""
    if gamma == 0.0:
        return 1.0
    if gamma == -0.5:
        return 1.0 / np.sqrt(r)
    if gamma == -1.0:
        return 1.0 / r
    if gamma == -1.5:
        return 1.0 / (r * np.sqrt(r))
    if gamma == -2.0:
        return 1.0 / (r * r)
    if gamma == -2.5:
        return 1.0 / (r * r * np.sqrt(r))
    return r**gamma


@njit(cache=True, error_model="numpy")
def pairwise_drift(v, gamma, eps):
    """Sum_j b(v_i - v_j) for every i, via symmetric pair accumulation.

    b is odd, so each unordered pair contributes opposite increments to its
    two rows; the total momentum of the returned array cancels to rounding.
    Returns an (n, 3) array (the plain sum, not divided by n).
    """
    n = v.shape[0]
    out = np.zeros((n, 3))
    if gamma == 0.0:
        # |z|**0 == 1 exactly (the floor is inactive at gamma = 0), so the
        # double sum collapses to a centered linear term.
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for j in range(n):
            s0 += v[j, 0]
            s1 += v[j, 1]
            s2 += v[j, 2]
        for i in range(n):
            out[i, 0] = -2.0 * (n * v[i, 0] - s0)
            out[i, 1] = -2.0 * (n * v[i, 1] - s1)
            out[i, 2] = -2.0 * (n * v[i, 2] - s2)
        return out
    for i in range(n):
        for j in range(i + 1, n):
            z0 = v[i, 0] - v[j, 0]
            z1 = v[i, 1] - v[j, 1]
            z2 = v[i, 2] - v[j, 2]
            r = np.sqrt(z0 * z0 + z1 * z1 + z2 * z2)
            if r < eps:
                r = eps
            w = -2.0 * _pow_gamma(r, gamma)
            c0 = w * z0
            c1 = w * z1
            c2 = w * z2
            out[i, 0] += c0
            out[i, 1] += c1
            out[i, 2] += c2
            out[j, 0] -= c0
            out[j, 1] -= c1
            out[j, 2] -= c2
    return out


@njit(cache=True, error_model="numpy")
def diffusion_increment(v, gamma, eps, noise, atoms):
    """Sum_m sigma(v_i - v_{atoms[i, m]}) @ noise[i, m] for every i.

    ``noise`` has shape (n, m, 3); ``atoms`` has shape (n, m) and lists the
    interaction partners of particle i (the self-pair contributes exactly
    zero because sigma(0) = 0).  Returns an (n, 3) array, unscaled.
    """
    n = v.shape[0]
    m = atoms.shape[1]
    out = np.zeros((n, 3))
    half = 0.5 * gamma
    for i in range(n):
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for k in range(m):
            j = atoms[i, k]
            z0 = v[i, 0] - v[j, 0]
            z1 = v[i, 1] - v[j, 1]
            z2 = v[i, 2] - v[j, 2]
            r2 = z0 * z0 + z1 * z1 + z2 * z2
            if r2 == 0.0:
                continue
            r = np.sqrt(r2)
            if r < eps:
                r = eps
            s = _pow_gamma(r, half)
            x0 = noise[i, k, 0]
            x1 = noise[i, k, 1]
            x2 = noise[i, k, 2]
            a0 += s * (z1 * x0 - z2 * x1)
            a1 += s * (-z0 * x0 + z2 * x2)
            a2 += s * (z0 * x1 - z1 * x2)
        out[i, 0] = a0
        out[i, 1] = a1
        out[i, 2] = a2
    return out


@njit(cache=True, error_model="numpy")
def step_inplace(v, gamma, eps, dt, noise, atoms, drift_only):
    """One Euler-Maruyama update from the frozen snapshot ``v``.

    Returns the post-step positions:
        v_i + (dt/n) * Sum_j b(v_i - v_j)
            + sqrt(dt/m) * Sum_m sigma(v_i - v_{atoms[i,m]}) @ noise[i,m]
    """
    n = v.shape[0]
    drift = pairwise_drift(v, gamma, eps)
    out = np.empty_like(v)
    cd = dt / n
    if drift_only:
        for i in range(n):
            for c in range(3):
                out[i, c] = v[i, c] + cd * drift[i, c]
        return out
    m = atoms.shape[1]
    diff = diffusion_increment(v, gamma, eps, noise, atoms)
    cs = np.sqrt(dt / m)
    for i in range(n):
        for c in range(3):
            out[i, c] = v[i, c] + cd * drift[i, c] + cs * diff[i, c]
    return out


@njit(cache=True, error_model="numpy")
def jgamma_rows(v, gamma, eps):
    """Row sums Sum_{j != i} (|v_i - v_j| v eps)**gamma, shape (n,)."""
    n = v.shape[0]
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            z0 = v[i, 0] - v[j, 0]
            z1 = v[i, 1] - v[j, 1]
            z2 = v[i, 2] - v[j, 2]
            r = np.sqrt(z0 * z0 + z1 * z1 + z2 * z2)
            if r < eps:
                r = eps
            w = _pow_gamma(r, gamma)
            out[i] += w
            out[j] += w
    return out


@njit(cache=True, error_model="numpy")
def loo_kde_values(v, bandwidth):
    """Leave-one-out Gaussian KDE evaluated at every sample point.

    Returns f_hat_{-i}(v_i) = (1/(n-1)) Sum_{j != i} K_h(v_i - v_j) with the
    standard 3-d Gaussian kernel of width ``bandwidth``.
    """
    n = v.shape[0]
    h2 = bandwidth * bandwidth
    inv2h2 = 0.5 / h2
    norm = (2.0 * np.pi * h2) ** (-1.5)
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            z0 = v[i, 0] - v[j, 0]
            z1 = v[i, 1] - v[j, 1]
            z2 = v[i, 2] - v[j, 2]
            r2 = z0 * z0 + z1 * z1 + z2 * z2
            k = np.exp(-r2 * inv2h2)
            out[i] += k
            out[j] += k
    return norm * out / (n - 1)
