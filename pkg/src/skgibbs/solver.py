"""Mirror descent in arctanh coordinates for the TAP stationarity equation.

Solves grad_m F(m, y) = 0 by the fixed-step dual iteration
x <- x - step * grad_m F(tanh(x), y), m = tanh(x).  Under the spectral event
the objective is relatively strongly convex and smooth with respect to the
binary-entropy mirror map, so the iteration contracts geometrically at rate
about (1 - step * gamma / 2).

Vectorized over a batch of tilts: y of shape (..., n) yields batched solves
sharing the iteration loop (all batch elements run until the slowest
converges; idempotent for the already-converged ones up to tol).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import SkInstance
from .tap import tap_gradient

X_OVERFLOW = 700.0


class SolverOverflowError(FloatingPointError):
    """Dual iterate left the representable range (|x_i| > 700)."""


@dataclass
class SolverConfig:
    step: float = 0.25
    max_iters: int | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.step <= 0.25:
            raise ValueError(f"step must be in (0, 1/4], got {self.step}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def iters_for(self, inst: SkInstance) -> int:
        if self.max_iters is not None:
            return self.max_iters
        # rate (1 - gamma/8) per step implies O(1/gamma * log(n/tol)) suffices
        g = max(inst.gamma, 1e-6)
        return max(1000, math.ceil(40.0 / g * math.log(inst.n / self.tol)))


@dataclass
class TapSolution:
    m: np.ndarray
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    residual_history: list | None = None


def solve_tap(inst: SkInstance, y, cfg: SolverConfig | None = None,
              warm_start=None, track_history: bool = False) -> TapSolution:
    """Mirror descent to the unique TAP magnetization at tilt y.

    y may be (n,) or a batch (..., n); warm_start is a dual vector x0 of the
    same shape (default x0 = y).  Residual is the sup norm of the gradient,
    maximized over the batch.
    """
    if cfg is None:
        cfg = SolverConfig()
    y = np.asarray(y, dtype=np.float64)
    x = y.copy() if warm_start is None else np.array(warm_start, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("warm start shape does not match tilt shape")
    max_iters = cfg.iters_for(inst)
    beta, n, A = inst.beta, inst.n, inst.A
    residual = np.inf
    iters = 0
    history: list | None = [] if track_history else None
    for iters in range(1, max_iters + 1):
        # gradient at m = tanh(x): atanh(m) is x itself in dual coordinates
        m = np.tanh(x)
        q = 1.0 - (m * m).sum(axis=-1, keepdims=True) / n
        g = x - beta * (m @ A) - y + beta * beta * q * m
        per_row = np.max(np.abs(g), axis=-1)
        residual = float(np.max(per_row))
        if history is not None:
            history.append(residual)
        if residual <= cfg.tol:
            break
        # freeze converged rows so they stop moving once within tolerance
        if g.ndim > 1:
            g = np.where((per_row > cfg.tol)[..., None], g, 0.0)
        x -= cfg.step * g
        if np.max(np.abs(x)) > X_OVERFLOW:
            raise SolverOverflowError(
                f"dual iterate exceeded |x| = {X_OVERFLOW} at iteration {iters}"
            )
    else:
        residual = float(np.max(np.abs(tap_gradient(inst, np.tanh(x), y))))
    return TapSolution(
        m=np.tanh(x), x=x, iterations=iters, residual=residual,
        converged=residual <= cfg.tol, residual_history=history,
    )
