"""SK disorder instances: seeded GOE coupling matrices and spectral-event checks.

The coupling matrix A is drawn from the Gaussian orthogonal ensemble with
off-diagonal variance 1/n and diagonal variance 2/n.  All randomness goes
through numpy's counter-based Philox generator so that instances (and any
per-trajectory substreams derived from a seed) are reproducible bit-for-bit,
including under parallel evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def rng_from_key(*key) -> np.random.Generator:
    """Deterministic generator keyed by a tuple of integers.

    Nested tuples are flattened, so callers may pass a composite stage key
    plus an index.  Used for all substream derivation (per-trajectory,
    per-step, per-chain) so that ensembles can be evaluated in any order or
    in parallel.
    """
    flat: list[int] = []
    for part in key:
        if isinstance(part, (tuple, list)):
            flat.extend(int(p) for p in part)
        else:
            flat.append(int(part))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(flat)))


def sample_goe(n: int, seed: int) -> np.ndarray:
    """Sample a symmetric n x n GOE matrix.

    Off-diagonal entries (i < j) are N(0, 1/n), mirrored; diagonal entries
    are N(0, 2/n).  Deterministic given (n, seed).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = rng_from_key(seed)
    x = rng.standard_normal((n, n))
    upper = np.triu(x, 1) / np.sqrt(n)
    a = upper + upper.T
    np.fill_diagonal(a, np.diag(x) * np.sqrt(2.0 / n))
    return a


@dataclass(frozen=True)
class SkInstance:
    """An SK disorder instance: (n, beta, A) with the derived gap gamma.

    Immutable; safe to share read-only across workers.  gamma = (1 - 2*beta)/2
    is the spectral-gap parameter of the high-temperature event
    {beta * ||A||_op <= 1 - gamma}.
    """

    n: int
    beta: float
    A: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError(f"beta must be in [0, 1/2), got {self.beta}")
        a = np.asarray(self.A, dtype=np.float64)
        if a.shape != (self.n, self.n):
            raise ValueError(f"A must be {self.n}x{self.n}, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("A must be exactly symmetric")
        object.__setattr__(self, "A", a)
        self.A.setflags(write=False)

    @property
    def gamma(self) -> float:
        return (1.0 - 2.0 * self.beta) / 2.0

    @classmethod
    def generate(cls, n: int, beta: float, seed: int) -> "SkInstance":
        return cls(n=n, beta=beta, A=sample_goe(n, seed), seed=seed)

    @cached_property
    def op_norm(self) -> float:
        """Largest absolute eigenvalue of A (symmetric eigendecomposition)."""
        try:
            evals = np.linalg.eigvalsh(self.A)
        except np.linalg.LinAlgError as e:  # pragma: no cover
            raise RuntimeError(f"eigen-solver failed on A: {e}") from e
        return float(np.max(np.abs(evals)))

    @cached_property
    def spectral_event(self) -> bool:
        """Whether beta * ||A||_op <= 1 - gamma holds for this instance."""
        return self.beta * self.op_norm <= 1.0 - self.gamma

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        iu = np.triu_indices(self.n)
        return json.dumps(
            {
                "n": self.n,
                "beta": self.beta,
                "seed": self.seed,
                "upper_triangle": self.A[iu].tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SkInstance":
        d = json.loads(text)
        n = int(d["n"])
        a = np.zeros((n, n))
        iu = np.triu_indices(n)
        a[iu] = np.asarray(d["upper_triangle"], dtype=np.float64)
        a = a + np.triu(a, 1).T
        return cls(n=n, beta=float(d["beta"]), A=a, seed=d.get("seed"))

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "SkInstance":
        with open(path) as f:
            return cls.from_json(f.read())


def check_spectral_event(inst: SkInstance) -> bool:
    """True iff beta * ||A||_op <= 1 - gamma (the high-temperature event)."""
    return inst.spectral_event
