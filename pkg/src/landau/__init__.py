"""Stochastic particle simulator for the spatially homogeneous Landau
equation with soft potentials, built around a coupled two-system
construction: shared noise matched through exact optimal-transport plans,
with diagnostics for the Wasserstein stability inequality and the a priori
estimates."""

from .kernel import KernelParams, a_matrix, b_drift, sigma, trace_a
from .ensemble import (
    Ensemble,
    GaussianSpec,
    MixtureSpec,
    UniformBallSpec,
    sample_initial,
    moment,
    j_gamma_hat,
    entropy_hat,
    lp_norm_hat,
    silverman_bandwidth,
    abar,
    cbar,
    ellipticity_floor,
)
from .transport import CouplingPlan, w2_exact, w2_bruteforce, plan_cost
from .noise import NoiseStream
from .dynamics import (
    BlowUpError,
    SimConfig,
    CoupledConfig,
    TimeSeries,
    CoupledTimeSeries,
    step,
    step_coupled,
    run,
    run_coupled,
)
from .experiments import (
    maxwell_covariance_oracle,
    StabilityReport,
    stability_experiment,
    admissible_exponents,
    lp_blowup_bound,
    moment_propagation_check,
    conservation_report,
)

__version__ = "0.1.0"
