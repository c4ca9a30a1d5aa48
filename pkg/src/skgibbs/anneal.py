"""Simulated-annealing estimator of the wedge-restricted log partition
function, and the density ratio it feeds into the rejection weights.

The inverse temperature is raised along the ladder beta_l = (l-1) beta / (4n),
l = 1..4n+1.  Rung 1 (beta = 0, field y kept) has the exact product-measure
base value; each subsequent ratio Z_{l+1}/Z_l is estimated as the mean of
g_l(sigma) = exp((beta_{l+1} - beta_l)/2 * <sigma, A sigma>) over polarized-
walk samples at beta_l.  Estimates telescope in log space; the final value is
the median over independent repeats.  All repeats run as one vectorized chain
block, warm-started rung to rung.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .instance import SkInstance, rng_from_key
from .oracle import (Wedge, binomial_wedge_log_size, restricted_product_logZ,
                     restricted_product_logZ_batch)
from .tap import tap_free_energy
from .walk import default_walk_steps, run_chains


@dataclass
class AnnealConfig:
    wedge: Wedge
    samples_per_rung: int = 1000
    repeats: int = 32
    walk_steps: int | None = None     # per rung; default ~ 2 n log n
    burn_in: int | None = None        # extra steps at rung 1
    ladder_len: int | None = None     # default 4n + 1

    def resolve(self, inst: SkInstance) -> "AnnealConfig":
        n = inst.n
        return replace(
            self,
            walk_steps=self.walk_steps if self.walk_steps is not None
            else max(50, int(np.ceil(2.0 * n * np.log(max(n, 2))))),
            burn_in=self.burn_in if self.burn_in is not None
            else default_walk_steps(n),
            ladder_len=self.ladder_len if self.ladder_len is not None
            else 4 * n + 1,
        )


def ladder(inst: SkInstance, ladder_len: int) -> np.ndarray:
    """beta_l = (l - 1) beta / (M), M = ladder_len - 1, up to beta itself."""
    m = ladder_len - 1
    if m == 0:
        return np.array([inst.beta])
    return np.arange(ladder_len) * (inst.beta / m)


def estimate_log_z(inst: SkInstance, y, cfg: AnnealConfig,
                   seed: int) -> tuple[float, dict]:
    """Median-of-repeats annealing estimate of the restricted log Z.

    Returns (logZhat, diagnostics); diagnostics carries the per-rung ratio
    estimates and the alternative field-free base value for comparison.
    """
    cfg = cfg.resolve(inst)
    y = np.asarray(y, dtype=np.float64)
    wedge = cfg.wedge
    betas = ladder(inst, cfg.ladder_len)
    M = len(betas) - 1
    base = restricted_product_logZ(y, wedge)
    diagnostics = {
        "base_log_z": base,
        "field_free_base": binomial_wedge_log_size(inst.n, wedge.radius),
        "ladder_len": len(betas),
        "rung_log_ratio": [],
    }
    if M == 0:
        return base, diagnostics

    R, N = cfg.repeats, cfg.samples_per_rung
    rng = rng_from_key(seed)
    sigma = np.tile(wedge.center.astype(np.float64), (R * N, 1))
    # log Y_l per (repeat, rung)
    log_ratios = np.zeros((R, M))
    for ell in range(M):
        rung_inst = SkInstance(n=inst.n, beta=float(betas[ell]), A=inst.A,
                               seed=inst.seed)
        steps = cfg.walk_steps + (cfg.burn_in if ell == 0 else 0)
        sigma = run_chains(rung_inst, y, wedge, sigma, steps, rng,
                           check_every=None).astype(np.float64)
        quad = np.einsum("bi,ij,bj->b", sigma, inst.A, sigma, optimize=True)
        log_g = 0.5 * (betas[ell + 1] - betas[ell]) * quad
        per_repeat = logsumexp(log_g.reshape(R, N), axis=1) - np.log(N)
        log_ratios[:, ell] = per_repeat
        diagnostics["rung_log_ratio"].append(float(np.median(per_repeat)))
    cum = base + np.cumsum(log_ratios, axis=1)
    logz = float(np.median(cum[:, -1]))
    diagnostics["per_repeat_log_z"] = cum[:, -1].tolist()
    return logz, diagnostics


def estimate_log_z_batch(inst: SkInstance, tilts, centers, radius: int,
                         cfg: AnnealConfig, rng) -> np.ndarray:
    """Annealing estimates for a whole batch of tilts at once.

    Row a of `tilts` is estimated on the wedge of the shared radius around
    centers[a]; all repeats and chains for all rows run as one lockstep
    block.  Returns the (A,) vector of median-of-repeats log Z values.
    """
    from .walk import run_chains_multi

    cfg = cfg.resolve(inst)
    tilts = np.asarray(tilts, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    A_batch, n = tilts.shape
    betas = ladder(inst, cfg.ladder_len)
    M = len(betas) - 1
    base = restricted_product_logZ_batch(tilts, centers, radius)
    if M == 0:
        return base

    R, N = cfg.repeats, cfg.samples_per_rung
    rep = np.repeat(np.arange(A_batch), R * N)
    y_block = tilts[rep]
    c_block = centers[rep]
    sigma = c_block.copy()
    total = np.zeros((A_batch, R))
    for ell in range(M):
        rung_inst = SkInstance(n=n, beta=float(betas[ell]), A=inst.A,
                               seed=inst.seed)
        steps = cfg.walk_steps + (cfg.burn_in if ell == 0 else 0)
        sigma = run_chains_multi(rung_inst, y_block, c_block, radius, sigma,
                                 steps, rng, check_every=None).astype(np.float64)
        quad = np.einsum("bi,ij,bj->b", sigma, inst.A, sigma, optimize=True)
        log_g = (0.5 * (betas[ell + 1] - betas[ell]) * quad).reshape(A_batch, R, N)
        total += logsumexp(log_g, axis=2) - np.log(N)
    return base + np.median(total, axis=1)


def log_density_ratio(inst: SkInstance, y, m_tap, cfg: AnnealConfig,
                      seed: int) -> tuple[float, dict]:
    """log of Zhat / exp(-F(m_tap, y)): the correction from the scaffold
    density to the true tilt density.  The TAP value approximates -log Z, so
    this is log Zhat + F(m_tap, y), an O(1) quantity."""
    logz, diagnostics = estimate_log_z(inst, y, cfg, seed)
    out = logz + tap_free_energy(inst, m_tap, y)
    diagnostics["log_density_ratio"] = out
    return out, diagnostics


def density_ratio(inst: SkInstance, y, m_tap, cfg: AnnealConfig,
                  seed: int) -> float:
    out, _ = log_density_ratio(inst, y, m_tap, cfg, seed)
    return float(np.exp(out))
