"""End-to-end sampler: localized tilt via the weighted dynamics, rejection
against the scaffold, then a wedge-restricted walk from the rounded tilt.

Per requested sample the pipeline
  1. runs a TAP-driven localization trajectory to the horizon, getting a
     terminal tilt y, magnetization m, and accumulated log-weight w;
  2. corrects the weight by the annealed density ratio, giving the combined
     log-weight w + log Zhat(y) + F(m, y);
  3. accepts or rejects against the calibrated quantile scale (accepted tilts
     are distributed approximately like the true localization endpoint);
  4. rounds sigma0 = sign(y) (zeros to +1) and runs the polarized walk on the
     Hamming wedge of radius ceil(wedge_eps * n) around sigma0 at tilt y.

Everything is batched: trajectories run as lockstep ensembles, the annealing
chains for a whole attempt chunk form one block, and the terminal walks for
all accepted samples run together.  Fully deterministic given the master
seed.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .anneal import AnnealConfig, estimate_log_z_batch
from .dynamics import (DynamicsConfig, TrajectoryError, default_horizon,
                       run_ensemble)
from .instance import SkInstance, rng_from_key
from .oracle import Wedge
from .rejection import calibrate, RejectionConfig
from .solver import SolverConfig
from .tap import tap_free_energy
from .walk import WalkCacheError, default_walk_steps, run_chains_multi


def sign_pm1(y: np.ndarray) -> np.ndarray:
    """sign with the tie sign(0) = +1, fixed for determinism."""
    return np.where(np.asarray(y) >= 0.0, 1.0, -1.0)


@dataclass
class PipelineConfig:
    n: int
    beta: float
    instance_seed: int
    num_samples: int
    seed: int = 0
    horizon: float | None = None
    eta: float = 0.02
    solver_tol: float = 1e-10
    wedge_eps: float = 0.4
    walk_steps: int | None = None          # terminal walk; default n log rule
    anneal_samples: int = 64
    anneal_repeats: int = 4
    anneal_walk_steps: int | None = None
    anneal_burn_in: int | None = None
    anneal_ladder_len: int | None = None
    c1: float | None = None                # None: empirical calibration
    c2: float | None = None
    calibration_draws: int = 512
    chunk_size: int = 2048
    max_attempt_factor: int = 50

    def __post_init__(self):
        if not 0.0 <= self.beta < 0.5:
            raise ValueError(f"beta must be in [0, 1/2), got {self.beta}")
        if self.num_samples < 1 or self.chunk_size < 1:
            raise ValueError("num_samples and chunk_size must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls(**json.loads(text))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def resolved_horizon(self) -> float:
        return self.horizon if self.horizon is not None else default_horizon()

    def wedge_radius(self) -> int:
        return min(self.n, math.ceil(self.wedge_eps * self.n))


def _attempt_batch(inst: SkInstance, cfg: PipelineConfig, batch: int,
                   size: int):
    """Run `size` trajectories plus their density ratios; returns
    (y, centers, logweights) for the batch."""
    dyn = DynamicsConfig(
        T=cfg.resolved_horizon(), eta=cfg.eta,
        noise_seed=(cfg.seed, 1, batch),
        solver=SolverConfig(tol=cfg.solver_tol),
    )
    state = run_ensemble(inst, dyn, size)
    centers = sign_pm1(state.y)
    anneal_cfg = AnnealConfig(
        wedge=Wedge(center=np.ones(inst.n, dtype=np.int8),
                    radius=cfg.wedge_radius()),
        samples_per_rung=cfg.anneal_samples, repeats=cfg.anneal_repeats,
        walk_steps=cfg.anneal_walk_steps, burn_in=cfg.anneal_burn_in,
        ladder_len=cfg.anneal_ladder_len,
    )
    logz = estimate_log_z_batch(inst, state.y, centers, cfg.wedge_radius(),
                                anneal_cfg, rng_from_key(cfg.seed, 2, batch))
    logweights = np.asarray(state.w) + logz + tap_free_energy(
        inst, state.m, state.y
    )
    return state.y, centers, logweights


def sample(cfg: PipelineConfig,
           inst: SkInstance | None = None) -> tuple[np.ndarray, dict]:
    """Draw cfg.num_samples spin configurations; returns (samples, telemetry).

    Samples come out as an (num_samples, n) int8 array in deterministic
    order.  Stage failures are recorded in telemetry["errors"] and the batch
    continues with fresh attempts.
    """
    t0 = time.perf_counter()
    if inst is None:
        inst = SkInstance.generate(cfg.n, cfg.beta, cfg.instance_seed)
    k = cfg.wedge_radius()
    t_pw = cfg.walk_steps if cfg.walk_steps is not None \
        else default_walk_steps(inst.n)
    telemetry: dict = {
        "config_hash": cfg.config_hash(),
        "attempts": 0, "accepts": 0, "errors": [],
        "wedge_radius": k, "terminal_walk_steps": t_pw,
    }

    # calibration batch fixes the acceptance scale
    y_cal, _, lw_cal = _attempt_batch(inst, cfg, batch=0,
                                      size=cfg.calibration_draws)
    rej = RejectionConfig(C1=cfg.c1, C2=cfg.c2,
                          calibration_draws=cfg.calibration_draws)
    log_r0, c1, c2 = calibrate(lw_cal, rej)
    log_thresh = math.log(8.0 * c2) + log_r0
    telemetry.update(log_r0=log_r0, c1=c1, c2=c2)
    t_cal = time.perf_counter()

    acc_y: list[np.ndarray] = []
    acc_center: list[np.ndarray] = []
    accepted = 0
    max_attempts = cfg.max_attempt_factor * max(cfg.num_samples,
                                                cfg.chunk_size)
    batch = 1
    while accepted < cfg.num_samples and telemetry["attempts"] < max_attempts:
        size = min(cfg.chunk_size,
                   max(256, 2 * (cfg.num_samples - accepted)))
        try:
            y, centers, lw = _attempt_batch(inst, cfg, batch, size)
        except (TrajectoryError, WalkCacheError) as e:
            telemetry["errors"].append(
                {"batch": batch, "stage": "attempt", "error": str(e)}
            )
            batch += 1
            continue
        u = rng_from_key(cfg.seed, 3, batch).random(size)
        keep = np.log(u) <= np.minimum(0.0, lw - log_thresh)
        telemetry["attempts"] += size
        if np.any(keep):
            acc_y.append(y[keep])
            acc_center.append(centers[keep])
            accepted += int(keep.sum())
        batch += 1
    telemetry["accepts"] = min(accepted, cfg.num_samples)
    if accepted < cfg.num_samples:
        telemetry["errors"].append(
            {"stage": "rejection", "error": "acceptance starvation",
             "accepted": accepted}
        )
    t_rej = time.perf_counter()

    if accepted == 0:
        telemetry["wall_time"] = time.perf_counter() - t0
        return np.zeros((0, inst.n), dtype=np.int8), telemetry
    ys = np.concatenate(acc_y)[: cfg.num_samples]
    centers = np.concatenate(acc_center)[: cfg.num_samples]
    out = run_chains_multi(inst, ys, centers, k, centers, t_pw,
                           rng_from_key(cfg.seed, 4))
    t_walk = time.perf_counter()
    telemetry["wall_times"] = {
        "calibration": t_cal - t0, "rejection": t_rej - t_cal,
        "walk": t_walk - t_rej, "total": t_walk - t0,
    }
    return out, telemetry


def write_samples(path, samples: np.ndarray, cfg: PipelineConfig,
                  fmt: str = "csv") -> None:
    """One sample per line; CSV of +-1 ints, or JSON with packed bitstrings.
    A header embeds the config hash for reproducibility audits."""
    if fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"# config_hash={cfg.config_hash()}\n")
            for row in samples:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
    elif fmt == "json":
        import base64

        bits = np.packbits((samples > 0).astype(np.uint8), axis=1)
        payload = {
            "config_hash": cfg.config_hash(),
            "n": int(samples.shape[1]) if samples.size else 0,
            "samples": [base64.b64encode(r.tobytes()).decode() for r in bits],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)
    else:
        raise ValueError(f"unknown format {fmt!r}")
