"""Approximate rejection sampling with an unknown normalizing constant.

The target weights are known only up to scale, so a calibration batch fixes
the scale: R0 is the (1 - 1/(6 C1))-quantile of the weights (lower-nearest
order statistic, no interpolation), and proposals are then accepted with
probability min(1, weight / (C3 R0)), C3 = 8 C2.  All weight arithmetic stays
in log space; the only exponentiation is the final log-uniform comparison.

C1 and C2 default to empirical surrogates measured on the calibration batch
itself (ratio of the 99.5% quantile to the median, floored at 2), since the
a-priori tail constants are not computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import rng_from_key


class AcceptanceStarvationError(RuntimeError):
    """No acceptance within the attempt budget; carries the observed rate."""

    def __init__(self, attempts: int, rate: float):
        self.attempts = attempts
        self.rate = rate
        super().__init__(
            f"no sample accepted in {attempts} attempts "
            f"(running acceptance rate {rate:.2e}); C1/C2 miscalibrated or "
            "the weight source is broken"
        )


@dataclass
class RejectionConfig:
    C1: float | None = None       # None: empirical surrogate from the draws
    C2: float | None = None
    calibration_draws: int = 256
    failure_prob: float = 0.05
    c_cal: float = 64.0

    def min_draws(self, c1: float) -> int:
        return math.ceil(self.c_cal * c1 * c1 * math.log(1.0 / self.failure_prob))


@dataclass
class WeightedSample:
    y: np.ndarray
    m: np.ndarray
    logweight: float


def empirical_tail_constant(logweights: np.ndarray) -> float:
    """max(2, 99.5%-quantile / median) of the weights, computed on logs."""
    lw = np.sort(np.asarray(logweights, dtype=np.float64))
    q995 = lw[min(lw.size - 1, math.ceil(0.995 * lw.size) - 1)]
    med = float(np.median(lw))
    return max(2.0, float(np.exp(q995 - med)))


def calibrate(draws, cfg: RejectionConfig) -> tuple[float, float, float]:
    """Quantile calibration on a batch of WeightedSamples (or raw logs).

    Returns (log_R0, C1, C2) with R0 the lower-nearest (1 - 1/(6 C1))-quantile
    of the weights.
    """
    if isinstance(draws, (list, tuple)) and draws \
            and hasattr(draws[0], "logweight"):
        lw = np.asarray([d.logweight for d in draws], dtype=np.float64)
    else:
        lw = np.asarray(draws, dtype=np.float64)
    if lw.size == 0:
        raise ValueError("empty calibration batch")
    c1 = cfg.C1 if cfg.C1 is not None else empirical_tail_constant(lw)
    c2 = cfg.C2 if cfg.C2 is not None else c1
    if lw.size < cfg.calibration_draws:
        raise ValueError(
            f"calibration needs at least {cfg.calibration_draws} draws, "
            f"got {lw.size}"
        )
    p = 1.0 - 1.0 / (6.0 * c1)
    idx = max(0, math.ceil(p * lw.size) - 1)
    log_r0 = float(np.sort(lw)[idx])
    return log_r0, c1, c2


def log_accept_threshold(log_r0: float, c2: float) -> float:
    """log(C3 R0) with C3 = 8 C2."""
    return math.log(8.0 * c2) + log_r0


def accept_loop(sample_source, cfg: RejectionConfig, log_r0: float, c2: float,
                seed: int, max_attempts: int = 100_000,
                telemetry: dict | None = None) -> WeightedSample:
    """Draw from `sample_source` (a callable of the attempt index) until
    log U <= logweight - log(C3 R0); returns the first accepted sample."""
    if not math.isfinite(log_r0):
        raise ValueError("log_r0 must be finite")
    thresh = log_accept_threshold(log_r0, c2)
    rng = rng_from_key(seed)
    for attempt in range(1, max_attempts + 1):
        x = sample_source(attempt - 1)
        log_u = math.log(rng.random())
        if log_u <= min(0.0, x.logweight - thresh):
            if telemetry is not None:
                telemetry["attempts"] = telemetry.get("attempts", 0) + attempt
                telemetry["accepts"] = telemetry.get("accepts", 0) + 1
            return x
    if telemetry is not None:
        telemetry["attempts"] = telemetry.get("attempts", 0) + max_attempts
    raise AcceptanceStarvationError(max_attempts, 0.0)


def accept_mask(logweights: np.ndarray, log_r0: float, c2: float,
                rng: np.random.Generator) -> np.ndarray:
    """Vectorized accept/reject over a weight batch; boolean mask."""
    lw = np.asarray(logweights, dtype=np.float64)
    thresh = log_accept_threshold(log_r0, c2)
    return np.log(rng.random(lw.shape)) <= np.minimum(0.0, lw - thresh)


def weight_histogram(logweights: np.ndarray, bins: int = 20) -> dict:
    """Log-spaced weight histogram for telemetry."""
    lw = np.asarray(logweights, dtype=np.float64)
    edges = np.linspace(lw.min(), lw.max() + 1e-12, bins + 1)
    counts, _ = np.histogram(lw, bins=edges)
    return {"log_edges": edges.tolist(), "counts": counts.tolist()}
