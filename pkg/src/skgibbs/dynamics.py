"""Euler-Maruyama simulation of the TAP-driven localization dynamics.

The system tracked per trajectory is (tilt y, dual magnetization x,
magnetization m = tanh(x), accumulated log-weight w):

  y+ = y + eta * m + sqrt(eta) * xi
  x_pred = x + eta * [D Q (m - f(m)) + diag(Q^2) D^2 m] + sqrt(eta) * D Q xi
  x+ = mirror-descent solve of the TAP equation at y+, warm-started at x_pred
  w+ = w + (eta/2) * [Tr Q(m) + |m|^2]        (left endpoint, pre-step m)

with Q the TAP resolvent, D = diag(1/(1-m^2)), f the Ito drift correction.
Noise for step s comes from the substream keyed (noise_seed, s), drawn as a
(B, n) block, so trajectory b of an ensemble is independent of the ensemble
size for b fixed and row 0 reproduces the single-trajectory run bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import SkInstance, rng_from_key
from .solver import SolverConfig, solve_tap
from .tap import drift_correction, tap_resolvent



class TrajectoryError(RuntimeError):
    """Trajectory aborted; carries the last valid state for debugging."""

    def __init__(self, message: str, state: "TrajectoryState"):
        self.state = state
        super().__init__(message)


@dataclass
class TrajectoryState:
    """One path point; arrays may carry a leading ensemble axis."""

    t: float
    y: np.ndarray
    x: np.ndarray
    m: np.ndarray
    w: np.ndarray | float

    @classmethod
    def initial(cls, n: int, batch: int | None = None) -> "TrajectoryState":
        shape = (n,) if batch is None else (batch, n)
        w = 0.0 if batch is None else np.zeros(batch)
        return cls(t=0.0, y=np.zeros(shape), x=np.zeros(shape),
                   m=np.zeros(shape), w=w)


def default_eta(inst: SkInstance, horizon: float, eps_disc: float = 0.1) -> float:
    """Discretization step from the TV-error budget rule.

    h = min(eps^2 / (2 n T L^2), sqrt(3/2) * eps / (sqrt(T) * L * sqrt(n)))
    with L = 2/gamma.  Conservative; most callers set eta explicitly.
    """
    L = 2.0 / inst.gamma
    a = eps_disc**2 / (2.0 * inst.n * horizon * L * L)
    b = math.sqrt(1.5) * eps_disc / (math.sqrt(horizon) * L * math.sqrt(inst.n))
    return min(a, b)


def default_horizon(eps_target: float = 0.05) -> float:
    """Localization horizon T = ceil(2 log(2 e^2 / eps))."""
    return float(math.ceil(2.0 * math.log(2.0 * math.e**2 / eps_target)))


@dataclass
class DynamicsConfig:
    T: float
    eta: float
    noise_seed: int
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.eta <= 0 or self.T < 0:
            raise ValueError("need eta > 0 and T >= 0")
        steps = self.T / self.eta
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"T/eta = {steps} must be an integer")

    @property
    def num_steps(self) -> int:
        return round(self.T / self.eta)


def step(inst: SkInstance, state: TrajectoryState, eta: float,
         xi: np.ndarray, solver: SolverConfig | None = None) -> TrajectoryState:
    """One Euler-Maruyama step; xi is standard Gaussian, same shape as y."""
    m, x, y = state.m, state.x, state.y
    q = tap_resolvent(inst, m)
    f = drift_correction(inst, m, resolvent=q)
    d = 1.0 / (1.0 - m * m)
    q2 = q @ q
    diag_q2 = np.diagonal(q2, axis1=-2, axis2=-1)
    tr_q = np.trace(q, axis1=-2, axis2=-1)

    y_next = y + eta * m + math.sqrt(eta) * xi
    qv = (q @ ((m - f) + xi / math.sqrt(eta))[..., None])[..., 0]
    x_pred = x + eta * (d * qv + diag_q2 * d * d * m)
    sol = solve_tap(inst, y_next, solver, warm_start=x_pred)
    w_next = state.w + 0.5 * eta * (tr_q + (m * m).sum(axis=-1))
    out = TrajectoryState(t=state.t + eta, y=y_next, x=sol.x, m=sol.m, w=w_next)
    if not sol.converged:
        raise TrajectoryError(
            f"TAP solver failed at t = {out.t:.6g} (residual {sol.residual:.3e})",
            out,
        )
    if np.max(np.abs(out.m)) >= 1.0 or not np.all(np.isfinite(out.x)):
        raise TrajectoryError(f"magnetization escaped the cube at t = {out.t:.6g}", out)
    return out


def run_ensemble(inst: SkInstance, cfg: DynamicsConfig, num: int,
                 trace: list | None = None) -> TrajectoryState:
    """Run `num` independent trajectories in lockstep; returns the terminal
    batched state.  If `trace` is a list, every intermediate state is appended.
    """
    state = TrajectoryState.initial(inst.n, batch=num)
    for s in range(cfg.num_steps):
        xi = rng_from_key(cfg.noise_seed, s).standard_normal((num, inst.n))
        state = step(inst, state, cfg.eta, xi, solver=cfg.solver)
        if trace is not None:
            trace.append(state)
    return state


def run_trajectory(inst: SkInstance, cfg: DynamicsConfig) -> TrajectoryState:
    """Single trajectory from the zero state; row 0 of any ensemble with the
    same noise_seed reproduces it bit-exactly."""
    out = run_ensemble(inst, cfg, num=1)
    return TrajectoryState(t=out.t, y=out.y[0], x=out.x[0], m=out.m[0],
                           w=float(np.asarray(out.w)[0]))


def ideal_sl_trajectory(inst: SkInstance, cfg: DynamicsConfig, table,
                        num: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Localization driven by the exact enumeration magnetization.

    Euler scheme dy = m_exact(y) dt + dB with the same noise substreams as
    run_ensemble, so the two dynamics are synchronously coupled.  Returns the
    paths (ys, ms) with shape (num_steps + 1, num, n).
    """
    n = inst.n
    ys = np.zeros((cfg.num_steps + 1, num, n))
    ms = np.zeros_like(ys)
    ms[0] = table.magnetization(ys[0])
    for s in range(cfg.num_steps):
        xi = rng_from_key(cfg.noise_seed, s).standard_normal((num, n))
        ys[s + 1] = ys[s] + cfg.eta * ms[s] + math.sqrt(cfg.eta) * xi
        ms[s + 1] = table.magnetization(ys[s + 1])
    return ys, ms


def write_trace(path, states: list, eta: float) -> None:
    """Dump a trajectory trace as CSV (step, t, w, |y|, |m|, min_gap)."""
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["step", "t", "w", "y_norm", "m_norm", "min_gap"])
        for s, st in enumerate(states, start=1):
            y = np.atleast_2d(st.y)[0]
            m = np.atleast_2d(st.m)[0]
            w = float(np.atleast_1d(np.asarray(st.w))[0])
            wr.writerow([s, st.t, w, np.linalg.norm(y), np.linalg.norm(m),
                         1.0 - np.max(np.abs(m))])
