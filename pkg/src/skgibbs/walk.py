"""Down-up polarized walk on a Hamming wedge, reversible for the tilted
Gibbs measure.

States are identified with the flipped set S = {i : sigma_i != center_i},
|S| <= radius.  One step applies P = D U:

  Down: with probability 1/n for each i in S move to T = S without i; with
  probability (n - |S|)/n stay.
  Up from T: move to T + {i} (i not in T, |T| + 1 <= radius) with probability
  proportional to (1/n) mu(T + {i}), or stay with probability proportional to
  ((n - |T|)/n) mu(T), where mu is the Gibbs weight
  exp((beta/2) <sigma, A sigma> + <y, sigma>).

All weights are handled via single-flip energy deltas against a cached local
field A sigma, so a step costs O(n) per chain; chain ensembles run in lockstep
with one vectorized categorical draw (Gumbel argmax) per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .instance import SkInstance, rng_from_key
from .oracle import Wedge

CACHE_TOL = 1e-6


class WalkCacheError(RuntimeError):
    """Cached log-weight drifted from a from-scratch recomputation."""


def gibbs_log_weight(inst: SkInstance, y: np.ndarray, sigma) -> np.ndarray:
    """(beta/2) <sigma, A sigma> + <y, sigma>; sigma may be (n,) or (B, n)."""
    s = np.asarray(sigma, dtype=np.float64)
    return 0.5 * inst.beta * np.einsum("...i,ij,...j->...", s, inst.A, s,
                                       optimize=True) + s @ y


def flip_log_deltas(inst: SkInstance, y, sigma, local_field) -> np.ndarray:
    """Log-weight change from flipping each single coordinate; (..., n)."""
    diag = np.diag(inst.A)
    return -2.0 * sigma * (inst.beta * local_field + y) + 2.0 * inst.beta * diag


@dataclass
class WalkState:
    """One chain: current sigma with its cached field A sigma and log-weight."""

    sigma: np.ndarray
    local_field: np.ndarray
    logw: float
    dist: int

    @classmethod
    def from_sigma(cls, inst: SkInstance, y, wedge: Wedge, sigma) -> "WalkState":
        s = np.asarray(sigma, dtype=np.float64)
        if not wedge.contains(s):
            raise ValueError("start configuration outside the wedge")
        return cls(
            sigma=s,
            local_field=inst.A @ s,
            logw=float(gibbs_log_weight(inst, np.asarray(y, float), s)),
            dist=int(np.count_nonzero(s != wedge.center)),
        )

    def check_cache(self, inst: SkInstance, y, tol: float = CACHE_TOL) -> None:
        fresh = float(gibbs_log_weight(inst, np.asarray(y, float), self.sigma))
        if abs(fresh - self.logw) > tol:
            raise WalkCacheError(
                f"cached logw off by {abs(fresh - self.logw):.3e}"
            )


def _step_chains(inst, y, center, radius, sigma, field, logw, dist, rng):
    """One polarized-walk step on a (B, n) chain block, in place.

    y and center are (B, n) so chains may carry distinct tilts and wedge
    centers; radius is shared.
    """
    n = inst.n
    B = sigma.shape[0]
    rows = np.arange(B)

    # down: pick a uniform coordinate; remove it if currently flipped
    j = rng.integers(0, n, size=B)
    flipped = sigma[rows, j] != center[rows, j]
    if np.any(flipped):
        rb, jb = rows[flipped], j[flipped]
        s_old = sigma[rb, jb]
        delta = (-2.0 * s_old * (inst.beta * field[rb, jb] + y[rb, jb])
                 + 2.0 * inst.beta * inst.A[jb, jb])
        field[rb] -= 2.0 * s_old[:, None] * inst.A[jb]
        sigma[rb, jb] = -s_old
        logw[flipped] += delta
        dist[flipped] -= 1

    # up: categorical over {stay} + single-coordinate additions, weights
    # relative to mu(T): stay (n - |T|)/n, add-i exp(delta_i)/n
    deltas = flip_log_deltas(inst, y, sigma, field)
    addable = (sigma == center) & (dist[:, None] < radius)
    shift = np.max(deltas, axis=1, keepdims=True)
    shift = np.maximum(shift, 0.0)
    w_add = np.where(addable, np.exp(deltas - shift), 0.0)
    w_stay = (n - dist) * np.exp(-shift[:, 0])
    cum = np.cumsum(w_add, axis=1)
    total = cum[:, -1] + w_stay
    u = rng.random(B) * total
    # inverse CDF: additions first in coordinate order, then the stay option
    choice = np.sum(cum <= u[:, None], axis=1)
    add = choice < n
    if np.any(add):
        rb, jb = rows[add], choice[add]
        s_old = sigma[rb, jb]
        field[rb] -= 2.0 * s_old[:, None] * inst.A[jb]
        sigma[rb, jb] = -s_old
        logw[add] += deltas[rb, jb]
        dist[add] += 1


def walk_step(inst: SkInstance, y, wedge: Wedge, state: WalkState,
              rng: np.random.Generator) -> WalkState:
    """One down-up step of a single chain."""
    y = np.asarray(y, dtype=np.float64)
    sigma = state.sigma[None, :].copy()
    field = state.local_field[None, :].copy()
    logw = np.array([state.logw])
    dist = np.array([state.dist])
    center = wedge.center.astype(np.float64)[None, :]
    _step_chains(inst, y[None, :], center, wedge.radius, sigma, field, logw,
                 dist, rng)
    return WalkState(sigma=sigma[0], local_field=field[0],
                     logw=float(logw[0]), dist=int(dist[0]))


def run_walk(inst: SkInstance, y, wedge: Wedge, start, steps: int,
             seed: int) -> np.ndarray:
    """Run one chain for `steps` steps from `start`; returns the final sigma."""
    out = run_chains(inst, y, wedge, np.asarray(start)[None, :], steps,
                     rng_from_key(seed))
    return out[0]


def run_chains(inst: SkInstance, y, wedge: Wedge, starts, steps: int,
               rng: np.random.Generator,
               check_every: int | None = 10_000) -> np.ndarray:
    """Run a (B, n) block of independent chains in lockstep.

    Returns the terminal (B, n) configurations as int8.  The cached
    log-weights are verified against a recomputation every `check_every`
    steps and at the end.
    """
    y = np.asarray(y, dtype=np.float64)
    sigma = np.asarray(starts, dtype=np.float64)
    if sigma.ndim != 2:
        raise ValueError("starts must be a (B, n) block")
    if not np.all(wedge.contains(sigma)):
        raise ValueError("start configuration outside the wedge")
    centers = np.broadcast_to(wedge.center.astype(np.float64), sigma.shape)
    return run_chains_multi(inst, np.broadcast_to(y, sigma.shape), centers,
                            wedge.radius, sigma, steps, rng,
                            check_every=check_every)


def run_chains_multi(inst: SkInstance, tilts, centers, radius: int, starts,
                     steps: int, rng: np.random.Generator,
                     check_every: int | None = 10_000) -> np.ndarray:
    """As run_chains, but each chain b carries its own tilt tilts[b] and
    wedge center centers[b] (shared radius)."""
    y = np.ascontiguousarray(tilts, dtype=np.float64)
    sigma = np.asarray(starts, dtype=np.float64).copy()
    center = np.ascontiguousarray(centers, dtype=np.float64)
    field = sigma @ inst.A
    logw = _logw_multi(inst, y, sigma)
    dist = np.count_nonzero(sigma != center, axis=1)
    if np.any(dist > radius):
        raise ValueError("start configuration outside the wedge")
    for s in range(steps):
        _step_chains(inst, y, center, radius, sigma, field, logw, dist, rng)
        if check_every and (s + 1) % check_every == 0:
            _verify_cache_multi(inst, y, sigma, logw)
    if steps > 0:
        _verify_cache_multi(inst, y, sigma, logw)
    return sigma.astype(np.int8)


def _logw_multi(inst, y, sigma):
    quad = np.einsum("bi,ij,bj->b", sigma, inst.A, sigma, optimize=True)
    return 0.5 * inst.beta * quad + np.einsum("bi,bi->b", y, sigma)


def _verify_cache_multi(inst, y, sigma, logw):
    worst = float(np.max(np.abs(_logw_multi(inst, y, sigma) - logw))) \
        if logw.size else 0.0
    if worst > CACHE_TOL:
        raise WalkCacheError(f"cached logw drifted by {worst:.3e}")


def default_walk_steps(n: int, eps: float = 0.05, c_walk: float = 10.0) -> int:
    """Step-count rule ceil(C * n * log(4 n / eps^2))."""
    return int(np.ceil(c_walk * n * np.log(4.0 * n / eps**2)))


# -- exact kernel construction (small wedges only) ---------------------------


def enumerate_wedge_subsets(n: int, k: int) -> list[tuple[int, ...]]:
    """All flipped sets S with |S| <= k, in (size, lexicographic) order."""
    out = []
    for r in range(k + 1):
        out.extend(combinations(range(n), r))
    return out


def _subset_sigmas(wedge: Wedge, subsets) -> np.ndarray:
    sig = np.tile(wedge.center.astype(np.float64), (len(subsets), 1))
    for idx, s in enumerate(subsets):
        sig[idx, list(s)] *= -1.0
    return sig


def build_kernel(inst: SkInstance, y, wedge: Wedge,
                 max_states: int = 100_000):
    """Explicit down and up matrices plus mu over the wedge subset states.

    Returns (subsets, log_mu, D, U) with P = D @ U the walk kernel.
    """
    y = np.asarray(y, dtype=np.float64)
    n, k = inst.n, wedge.radius
    subsets = enumerate_wedge_subsets(n, k)
    N = len(subsets)
    if N > max_states:
        raise ValueError(f"wedge has {N} states, above the cap {max_states}")
    index = {s: i for i, s in enumerate(subsets)}
    log_mu = gibbs_log_weight(inst, y, _subset_sigmas(wedge, subsets))
    mu = np.exp(log_mu - log_mu.max())

    D = np.zeros((N, N))
    for s, i in index.items():
        D[i, i] = (n - len(s)) / n
        for a in s:
            t = tuple(x for x in s if x != a)
            D[i, index[t]] += 1.0 / n
    U = np.zeros((N, N))
    for t, j in index.items():
        w_stay = ((n - len(t)) / n) * mu[j]
        weights = [(j, w_stay)]
        if len(t) < k:
            for a in range(n):
                if a not in t:
                    s = tuple(sorted(t + (a,)))
                    weights.append((index[s], mu[index[s]] / n))
        total = sum(w for _, w in weights)
        if total == 0.0:
            # |T| = n with no additions possible: row unreachable after D
            U[j, j] = 1.0
            continue
        for i, w in weights:
            U[j, i] += w / total
    return subsets, log_mu, D, U


def transition_matrix(inst: SkInstance, y, wedge: Wedge,
                      max_states: int = 100_000) -> np.ndarray:
    subsets, log_mu, D, U = build_kernel(inst, y, wedge, max_states)
    return D @ U


def stationary_check(inst: SkInstance, y, wedge: Wedge,
                     max_states: int = 100_000) -> dict:
    """Row-stochasticity, stationarity, and reversibility of the exact kernel."""
    subsets, log_mu, D, U = build_kernel(inst, y, wedge, max_states)
    P = D @ U
    mu = np.exp(log_mu - np.logaddexp.reduce(log_mu))
    flow = mu[:, None] * P
    report = {
        "num_states": len(subsets),
        "row_sum_error": float(np.max(np.abs(P.sum(axis=1) - 1.0))),
        "stationarity_error": float(np.abs(mu @ P - mu).sum()),
        "reversibility_error": float(np.max(np.abs(flow - flow.T))),
    }
    # adjointness: mu(S) D(S,T) = (mu D)(T) U(T,S)
    muD = mu @ D
    report["adjointness_error"] = float(
        np.max(np.abs(mu[:, None] * D - (muD[:, None] * U).T))
    )
    report["ok"] = (
        report["row_sum_error"] <= 1e-12
        and report["stationarity_error"] <= 1e-10
        and report["reversibility_error"] <= 1e-10
        and report["adjointness_error"] <= 1e-12
    )
    return report
