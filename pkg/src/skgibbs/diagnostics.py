"""Desk-scale empirical probes of the analytical regularity claims.

Each statistic compares a quantity the sampler computes (TAP resolvent,
TAP magnetization, rounded tilt signs, algorithmic paths) against the exact
enumeration oracle or a closed-form law, and reports (mean, stderr, trials)
plus a hash of its own configuration.  The boundedness claims are asserted by
the callers as ratio tests across n, never as absolute thresholds.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np
from scipy.stats import norm

from .dynamics import DynamicsConfig, ideal_sl_trajectory, run_ensemble
from .instance import SkInstance, rng_from_key
from .oracle import ExactTable
from .solver import SolverConfig, solve_tap
from .tap import tap_hessian


def _report(values: np.ndarray, **extra) -> dict:
    values = np.asarray(values, dtype=np.float64)
    cfg_hash = hashlib.sha256(
        json.dumps(extra, sort_keys=True, default=str).encode()
    ).hexdigest()[:16]
    out = {
        "mean": float(values.mean()),
        "stderr": float(values.std(ddof=1) / np.sqrt(values.size))
        if values.size > 1 else 0.0,
        "trials": int(values.size),
        "config_hash": cfg_hash,
    }
    out.update(extra)
    return out


def _dyn_config(t: float, eta: float, seed) -> DynamicsConfig:
    steps = max(1, round(t / eta))
    return DynamicsConfig(T=t, eta=t / steps if t > 0 else eta,
                          noise_seed=seed) if t > 0 else DynamicsConfig(
        T=0.0, eta=eta, noise_seed=seed)


def covariance_frobenius_stat(inst: SkInstance, t: float, trajectories: int,
                              seed: int, eta: float = 0.05) -> dict:
    """Mean |Q(m_t)^{-1} Cov_exact(y_t) - I|_F^2 along oracle-driven
    localization paths run to time t."""
    table = ExactTable(inst)
    cfg = _dyn_config(t, eta, (seed, 0))
    ys, ms = ideal_sl_trajectory(inst, cfg, table, num=trajectories)
    y_t, m_t = ys[-1], ms[-1]
    cov = table.covariance(y_t)
    h = tap_hessian(inst, m_t)
    resid = h @ cov - np.eye(inst.n)
    vals = (resid**2).sum(axis=(-2, -1))
    return _report(vals, statistic="covariance_frobenius", n=inst.n,
                   beta=inst.beta, t=t, eta=cfg.eta, seed=seed)


def magnetization_error_stat(inst: SkInstance, t: float, trajectories: int,
                             seed: int, eta: float = 0.05) -> dict:
    """Mean |m_tap(y_t) - m_exact(y_t)|^2 along oracle-driven paths."""
    table = ExactTable(inst)
    cfg = _dyn_config(t, eta, (seed, 0))
    ys, ms = ideal_sl_trajectory(inst, cfg, table, num=trajectories)
    sol = solve_tap(inst, ys[-1], SolverConfig())
    vals = ((sol.m - ms[-1]) ** 2).sum(axis=-1)
    return _report(vals, statistic="magnetization_error", n=inst.n,
                   beta=inst.beta, t=t, eta=cfg.eta, seed=seed,
                   solver_converged=bool(sol.converged))


def wedge_concentration_stat(T: float, n: int, trials: int,
                             seed: int) -> dict:
    """Empirical per-coordinate sign-disagreement rate of y_T = T x0 + B_T
    against the Gaussian prediction Phi(-sqrt(T))."""
    rng = rng_from_key(seed)
    noise = rng.standard_normal((trials, n))
    y = T + math.sqrt(T) * noise if T > 0 else noise
    disagree = y < 0.0
    rate = float(disagree.mean())
    predicted = float(norm.cdf(-math.sqrt(T)))
    rel = abs(rate - predicted) / predicted if predicted > 0 else 0.0
    return _report(
        disagree.ravel().astype(np.float64),
        statistic="wedge_concentration", T=T, n=n, trials=trials, seed=seed,
        rate=rate, predicted=predicted, relative_error=rel,
    )


def coupled_wasserstein_stat(inst: SkInstance, T: float, eta: float,
                             trajectories: int, seed: int) -> dict:
    """Mean squared distance between the algorithmic and oracle-driven paths
    fed the same noise (synchronous coupling), at the horizon."""
    table = ExactTable(inst)
    cfg = _dyn_config(T, eta, (seed, 0))
    term = run_ensemble(inst, cfg, trajectories)
    ys, ms = ideal_sl_trajectory(inst, cfg, table, num=trajectories)
    vals = ((term.y - ys[-1]) ** 2).sum(axis=-1) \
        + ((term.m - ms[-1]) ** 2).sum(axis=-1)
    return _report(vals, statistic="coupled_wasserstein", n=inst.n,
                   beta=inst.beta, T=T, eta=cfg.eta, seed=seed)
