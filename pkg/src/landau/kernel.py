"""Collision-kernel coefficients for the soft-potential Landau operator.

Every coefficient carries the power-law radial factor |z|**gamma, which is
singular at z = 0 when gamma < 0.  We evaluate the radial factor with the
radius floored at ``eps`` and leave the matrix/vector factors exact.  The
floor preserves the square-root identity sigma @ sigma.T == a, keeps the
drift odd (so pairwise momentum cancellation survives), and removes the
origin singularity.  Inside the ball |z| < eps the drift is no longer the
divergence of the diffusion matrix; that is an accepted trade-off.

All functions accept a single velocity difference of shape (3,) or a batch
with shape (..., 3) and return correspondingly batched results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KernelParams", "a_matrix", "b_drift", "sigma", "trace_a"]


@dataclass(frozen=True)
class KernelParams:
    """Interaction exponent gamma in (-3, 0] and singularity floor eps > 0.

    gamma = 0 (Maxwell molecules) is admitted as a validation mode: the
    covariance of the solution then closes and provides an exact oracle.
    """

    gamma: float
    eps: float = 1e-4

    def __post_init__(self):
        if not -3.0 < self.gamma <= 0.0:
            raise ValueError(f"gamma must lie in (-3, 0], got {self.gamma}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def _floored_radial(z: np.ndarray, kp: KernelParams):
    """Return ((|z| v eps)**gamma, |z|) for a (..., 3) array."""
    r = np.sqrt(np.sum(z * z, axis=-1))
    return np.maximum(r, kp.eps) ** kp.gamma, r


def a_matrix(z, kp: KernelParams) -> np.ndarray:
    """Diffusion matrix (|z| v eps)**gamma * (|z|^2 I - z z^T), shape (..., 3, 3).

    Symmetric, positive semidefinite, and annihilates z itself.
    """
    z = np.asarray(z, dtype=np.float64)
    w, r = _floored_radial(z, kp)
    outer = z[..., :, None] * z[..., None, :]
    proj = (r * r)[..., None, None] * np.eye(3) - outer
    return w[..., None, None] * proj


def b_drift(z, kp: KernelParams) -> np.ndarray:
    """Drift vector -2 (|z| v eps)**gamma * z, shape (..., 3).  Odd in z."""
    z = np.asarray(z, dtype=np.float64)
    w, _ = _floored_radial(z, kp)
    return -2.0 * w[..., None] * z


def sigma(z, kp: KernelParams) -> np.ndarray:
    """Square root of the diffusion matrix, shape (..., 3, 3).

    sigma(z) = (|z| v eps)**(gamma/2) * [[ z2, -z3,  0],
                                         [-z1,  0,  z3],
                                         [  0,  z1, -z2]]
    and sigma @ sigma.T == a_matrix wherever |z| >= eps.
    """
    z = np.asarray(z, dtype=np.float64)
    w, _ = _floored_radial(z, kp)
    s = np.sqrt(w)
    z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2]
    zero = np.zeros_like(z1)
    m = np.stack(
        [
            np.stack([z2, -z3, zero], axis=-1),
            np.stack([-z1, zero, z3], axis=-1),
            np.stack([zero, z1, -z2], axis=-1),
        ],
        axis=-2,
    )
    return s[..., None, None] * m


def trace_a(z, kp: KernelParams) -> np.ndarray:
    """Trace of a_matrix: 2 (|z| v eps)**gamma * |z|^2."""
    z = np.asarray(z, dtype=np.float64)
    w, r = _floored_radial(z, kp)
    return 2.0 * w * r * r
