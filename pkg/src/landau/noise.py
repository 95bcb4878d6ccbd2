"""Counter-addressed Gaussian noise for reproducible particle dynamics.

Each (seed, step, atom) triple maps to a fixed Philox counter block, so an
increment can be regenerated in isolation: trajectories are bitwise
reproducible regardless of evaluation order, chunking, or thread count.
Gaussians are produced by the Box-Muller transform from two fixed-position
uniforms each, which (unlike ziggurat sampling) consumes a deterministic
number of raw words per variate.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NoiseStream"]

_TAG_GAUSS = 0
_TAG_ATOMS = 1
_TWO_M53 = 2.0**-53


class NoiseStream:
    """Deterministic stream of standard 3-d Gaussian increments.

    Addressing contract: ``gaussians(step, n_atoms)[m, c]`` depends only on
    (seed, step, m, c).  ``atom_indices`` draws the interaction partners for
    the subsampled-diffusion variant from an independent substream.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = seed

    def _key(self, tag: int, step: int) -> int:
        # 128-bit Philox key: seed in the high word, (tag, step) in the low.
        return ((self.seed & 0xFFFFFFFFFFFFFFFF) << 64) | (tag << 56) | int(step)

    def _uniforms(self, tag: int, step: int, n: int) -> np.ndarray:
        raw = np.random.Philox(key=self._key(tag, step)).random_raw(n)
        # strictly inside (0, 1) so log/ppf transforms never hit an endpoint
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53

    def gaussians(self, step: int, n_atoms: int) -> np.ndarray:
        """Standard normal increments for atoms 0..n_atoms-1, shape (n_atoms, 3)."""
        u = self._uniforms(_TAG_GAUSS, step, 6 * n_atoms)
        g = np.sqrt(-2.0 * np.log(u[0::2])) * np.cos(2.0 * np.pi * u[1::2])
        return g.reshape(n_atoms, 3)

    def atom_indices(self, step: int, n_particles: int, m: int, n: int) -> np.ndarray:
        """Partner indices for subsampled diffusion, shape (n_particles, m).

        Uniform with replacement over 0..n-1, so the subsampled quadratic
        variation is unbiased for the full-atom one.
        """
        rng = np.random.Generator(np.random.Philox(key=self._key(_TAG_ATOMS, step)))
        return rng.integers(0, n, size=(n_particles, m))
