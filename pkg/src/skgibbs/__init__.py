"""Sampler for the high-temperature Sherrington-Kirkpatrick Gibbs measure.

Components: seeded GOE disorder instances, an exact enumeration oracle, the
TAP free-energy calculus, a mirror-descent TAP solver, weighted localization
dynamics, a wedge-restricted polarized walk, an annealed partition-function
estimator, quantile-calibrated rejection sampling, the end-to-end pipeline,
and a diagnostics suite.
"""

from .anneal import AnnealConfig, density_ratio, estimate_log_z
from .dynamics import (DynamicsConfig, TrajectoryState, run_ensemble,
                       run_trajectory)
from .instance import SkInstance, check_spectral_event, rng_from_key, sample_goe
from .oracle import (ExactSummary, ExactTable, Wedge, exact_sample,
                     exact_summary, restricted_product_logZ, tv_distance)
from .pipeline import PipelineConfig, sample
from .rejection import RejectionConfig, WeightedSample, accept_loop, calibrate
from .solver import SolverConfig, TapSolution, solve_tap
from .tap import (delta_diag, drift_correction, tap_free_energy, tap_gradient,
                  tap_resolvent, weight_integrand)
from .walk import WalkState, run_walk, stationary_check, walk_step

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig", "DynamicsConfig", "ExactSummary", "ExactTable",
    "PipelineConfig", "RejectionConfig", "SkInstance", "SolverConfig",
    "TapSolution", "TrajectoryState", "WalkState", "Wedge", "WeightedSample",
    "accept_loop", "calibrate", "check_spectral_event", "delta_diag",
    "density_ratio", "drift_correction", "estimate_log_z", "exact_sample",
    "exact_summary", "restricted_product_logZ", "rng_from_key",
    "run_ensemble", "run_trajectory", "run_walk", "sample", "sample_goe",
    "solve_tap", "stationary_check", "tap_free_energy", "tap_gradient",
    "tap_resolvent", "tv_distance", "walk_step", "weight_integrand",
]
