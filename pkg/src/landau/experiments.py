"""Experiment harnesses: closed-form oracles, exponent arithmetic, and the
coupled-system stability measurement.

The theory's constants (the Gronwall rate and the L^p growth rate) are never
numeric, so the harnesses fit and report constants rather than asserting
values; acceptance binds to dominance, boundedness, and stability of the
fits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dynamics import CoupledConfig, CoupledTimeSeries, TimeSeries, run_coupled

__all__ = [
    "maxwell_covariance_oracle",
    "StabilityReport",
    "stability_experiment",
    "admissible_exponents",
    "lp_blowup_bound",
    "moment_propagation_check",
    "conservation_report",
]


def maxwell_covariance_oracle(sigma0, t: float) -> np.ndarray:
    """Exact covariance at time t of a zero-mean Maxwell-molecule solution.

    At gamma = 0 the second moments close: dS/dt = 2 tr(S) I - 6 S, so the
    trace is conserved and the deviatoric part relaxes at rate 6:
        S(t) = (tr S0 / 3) I + exp(-6 t) (S0 - (tr S0 / 3) I).
    """
    sigma0 = np.asarray(sigma0, dtype=np.float64)
    if sigma0.shape != (3, 3) or not np.allclose(sigma0, sigma0.T):
        raise ValueError("sigma0 must be a symmetric 3x3 matrix")
    if np.linalg.eigvalsh(sigma0)[0] <= 0:
        raise ValueError("sigma0 must be positive definite")
    if t < 0:
        raise ValueError("t must be nonnegative")
    iso = np.trace(sigma0) / 3.0 * np.eye(3)
    return iso + np.exp(-6.0 * t) * (sigma0 - iso)


@dataclass
class StabilityReport:
    """Fitted Gronwall-type slopes from regressing log W2^2 on the running
    integral of the two J_gamma estimates."""

    seeds: list
    slopes: np.ndarray  # per-seed least-squares slope, intercept pinned
    slope_median: float
    c_max: float  # smallest constant making the dominance-in-exponent bound hold
    dominance_ok: bool  # W2^2 <= matched-pair MSD at every record of every seed
    trivial: bool  # W2^2(0) == 0 for every seed
    series: list  # CoupledTimeSeries per seed
    w2sq0: np.ndarray
    w2sq_end: np.ndarray


def _fit_slope(series: CoupledTimeSeries) -> tuple:
    """Least-squares slope of log w2sq(t) - log w2sq(0) against jint(t),
    intercept constrained to zero.  Returns (slope, pointwise_max_ratio)."""
    mask = (series.w2sq > 0) & (series.jint > 0) & np.isfinite(series.w2sq)
    if series.w2sq[0] <= 0 or not mask.any():
        return np.nan, np.nan
    x = series.jint[mask]
    y = np.log(series.w2sq[mask]) - np.log(series.w2sq[0])
    slope = float(np.dot(x, y) / np.dot(x, x))
    return slope, float(np.max(y / x))


def stability_experiment(config: CoupledConfig, seeds: Sequence[int]) -> StabilityReport:
    """Run the coupled system once per seed and summarize the Wasserstein
    stability inequality: dominance of the pair MSD over W2^2, and the
    distribution of fitted exponential slopes."""
    series_list = []
    slopes = []
    ratios = []
    dominance_ok = True
    w2sq0 = []
    w2sq_end = []
    for seed in seeds:
        series = run_coupled(replace(config, seed=int(seed)))
        series_list.append(series)
        ok = np.isfinite(series.w2sq) & np.isfinite(series.pair_msd)
        if np.any(series.w2sq[ok] > series.pair_msd[ok] * (1 + 1e-12) + 1e-15):
            dominance_ok = False
        slope, ratio = _fit_slope(series)
        slopes.append(slope)
        ratios.append(ratio)
        w2sq0.append(series.w2sq[0])
        w2sq_end.append(series.w2sq[np.isfinite(series.w2sq)][-1])
    slopes = np.asarray(slopes)
    trivial = bool(np.all(np.asarray(w2sq0) == 0.0))
    finite = slopes[np.isfinite(slopes)]
    return StabilityReport(
        seeds=list(seeds),
        slopes=slopes,
        slope_median=float(np.median(finite)) if finite.size else np.nan,
        c_max=float(np.nanmax(ratios)) if not trivial else np.nan,
        dominance_ok=dominance_ok,
        trivial=trivial,
        series=series_list,
        w2sq0=np.asarray(w2sq0),
        w2sq_end=np.asarray(w2sq_end),
    )


def admissible_exponents(gamma: float, q: float | None = None) -> dict:
    """Exponent arithmetic for well-posedness of soft potentials.

    Returns q_min = gamma^2 / (2 + gamma) (only for gamma in (-2, 0)),
    p_low = 3 / (3 + gamma), and, when a moment order q > q_min is supplied,
    p_high = (3q - 3 gamma) / (q - 3 gamma).
    """
    if not -3.0 < gamma < 0.0:
        raise ValueError("gamma must lie in (-3, 0)")
    out = {"p_low": 3.0 / (3.0 + gamma), "q_min": None, "p_high": None}
    if gamma > -2.0:
        out["q_min"] = gamma * gamma / (2.0 + gamma)
    if q is not None:
        if out["q_min"] is None:
            raise ValueError("a moment order q only applies for gamma in (-2, 0)")
        if q <= out["q_min"]:
            raise ValueError(f"q must exceed q_min = {out['q_min']}")
        out["p_high"] = (3.0 * q - 3.0 * gamma) / (q - 3.0 * gamma)
    return out


def lp_blowup_bound(lp0: float, p: float, c: float, t: float) -> dict:
    """A priori L^p growth bound and its blow-up horizon.

    bound = tan(arctan(lp0^p) + c t)^(1/p) and
    t_star = (pi/2 - arctan(lp0^p)) / c; t must stay below t_star.
    """
    if not lp0 > 0:
        raise ValueError("lp0 must be positive")
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not c > 0:
        raise ValueError("c must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    theta0 = np.arctan(lp0**p)
    t_star = (np.pi / 2.0 - theta0) / c
    if t >= t_star:
        raise ValueError(f"t = {t} is past the blow-up horizon t_star = {t_star}")
    return {"bound": float(np.tan(theta0 + c * t) ** (1.0 / p)), "t_star": float(t_star)}


def moment_propagation_check(series: TimeSeries, k: float, budget: float) -> dict:
    """Check that the recorded m_k stays below budget * m_k(0) + budget."""
    if k == 2.0:
        values = series.m2
    elif k == 4.0:
        values = series.m4
    else:
        raise ValueError("only the recorded moment orders k in {2, 4} are available")
    if series.blown_up:
        return {"passed": False, "max_excursion": float("inf")}
    limit = budget * values[0] + budget
    return {"passed": bool(np.max(values) <= limit), "max_excursion": float(np.max(values))}


def conservation_report(series: TimeSeries, entropy_band: float = 0.05) -> dict:
    """Momentum / energy drift and entropy-monotonicity violations.

    Entropy decay is statistical: a record counts as a violation only when
    the estimate rises by more than the noise band over the previous record.
    """
    ok = ~np.isnan(series.m2)
    mean = series.mean[ok]
    m2 = series.m2[ok]
    entropy = series.entropy[ok]
    momentum_drift = float(np.max(np.linalg.norm(mean - mean[0], axis=1))) if len(mean) else np.nan
    energy_drift = float(np.max(np.abs(m2 - m2[0])) / m2[0]) if len(m2) else np.nan
    finite_entropy = entropy[np.isfinite(entropy)]
    violations = int(np.sum(np.diff(finite_entropy) > entropy_band))
    return {
        "momentum_drift": momentum_drift,
        "energy_drift": energy_drift,
        "entropy_violations": violations,
    }
