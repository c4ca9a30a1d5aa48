"""TAP free energy, gradient, Hessian resolvent, drift correction, and weights.

Conventions, fixed once and verified by the finite-difference tests:

  F(m, y) = -(beta/2) <m, A m> - <y, m> - sum_i h(m_i)
            - (n beta^2 / 4) (1 - |m|^2/n)^2

with h the (positive) binary entropy h(x) = -((1+x)/2) log((1+x)/2)
- ((1-x)/2) log((1-x)/2), so h'(x) = -atanh(x).  Then

  grad F = atanh(m) - beta A m - y + beta^2 (1 - |m|^2/n) m,

whose root is the TAP magnetization (m = tanh(y) at beta = 0, matching the
exact Gibbs mean), and

  hess F = -beta A + D(m) + beta^2 (1 - |m|^2/n) I - (2 beta^2 / n) m m^T,

with D(m) = diag(1/(1 - m_i^2)).  The resolvent Q = (hess F)^{-1} approximates
the Gibbs covariance.  F(m_tap, y) approximates -log Z(beta A, y), which is the
orientation the scaffold density and the annealing density ratio rely on.

All functions accept a single magnetization (n,) or a batch (..., n) and
vectorize over the leading axes.
"""

from __future__ import annotations

import numpy as np

from .instance import SkInstance


class TapDomainError(ValueError):
    """Raised when a magnetization leaves the open cube (-1, 1)^n."""


class TapHessianError(np.linalg.LinAlgError):
    """TAP Hessian not positive definite (spectral event violated)."""

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"TAP Hessian not positive definite (smallest eigenvalue "
            f"{min_eigenvalue:.6e})"
        )


def _check_interior(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if np.any(np.abs(m) >= 1.0):
        raise TapDomainError("magnetization must lie strictly inside (-1, 1)^n")
    return m


def atanh_stable(m: np.ndarray) -> np.ndarray:
    """atanh via log1p, avoiding cancellation near |m| = 1."""
    return 0.5 * (np.log1p(m) - np.log1p(-m))


def binary_entropy(m: np.ndarray) -> np.ndarray:
    """h(m) elementwise, with h(0) = log 2 and h(+-1) limit 0.

    Written as log 2 - ((1+m) log1p(m) + (1-m) log1p(-m)) / 2 for accuracy
    at small |m|.
    """
    return np.log(2.0) - 0.5 * ((1.0 + m) * np.log1p(m) + (1.0 - m) * np.log1p(-m))


def tap_free_energy(inst: SkInstance, m, y) -> np.ndarray | float:
    m = _check_interior(m)
    y = np.asarray(y, dtype=np.float64)
    beta, n = inst.beta, inst.n
    quad = ((m @ inst.A) * m).sum(axis=-1)
    q = 1.0 - (m * m).sum(axis=-1) / n
    out = (
        -0.5 * beta * quad
        - (y * m).sum(axis=-1)
        - binary_entropy(m).sum(axis=-1)
        - 0.25 * n * beta**2 * q * q
    )
    return float(out) if np.ndim(out) == 0 else out


def tap_gradient(inst: SkInstance, m, y) -> np.ndarray:
    m = _check_interior(m)
    y = np.asarray(y, dtype=np.float64)
    beta, n = inst.beta, inst.n
    q = 1.0 - (m * m).sum(axis=-1, keepdims=True) / n
    return atanh_stable(m) - beta * (m @ inst.A) - y + beta**2 * q * m


def tap_hessian(inst: SkInstance, m) -> np.ndarray:
    """The matrix whose inverse is the resolvent; shape (..., n, n)."""
    m = _check_interior(m)
    beta, n = inst.beta, inst.n
    d = 1.0 / (1.0 - m * m)
    q = 1.0 - (m * m).sum(axis=-1) / n
    h = np.broadcast_to(-beta * inst.A, m.shape[:-1] + (n, n)).copy()
    idx = np.arange(n)
    h[..., idx, idx] += d + beta**2 * q[..., None]
    h -= (2.0 * beta**2 / n) * m[..., :, None] * m[..., None, :]
    return h


def tap_resolvent(inst: SkInstance, m) -> np.ndarray:
    """Q(m) = (hess F)^{-1}, via a positive-definite Cholesky solve.

    Raises TapHessianError carrying the smallest eigenvalue when the Hessian
    is not positive definite (the failure is a meaningful event upstream).
    """
    h = tap_hessian(inst, m)
    try:
        c = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        raise TapHessianError(float(np.linalg.eigvalsh(h).min())) from None
    inv_c = np.linalg.inv(c)
    q = np.swapaxes(inv_c, -1, -2) @ inv_c
    return 0.5 * (q + np.swapaxes(q, -1, -2))


def drift_correction(inst: SkInstance, m, resolvent: np.ndarray | None = None) -> np.ndarray:
    """f(m) = (E_D[Q^2] D^2 - (beta^2/n)(Tr[Q^2] I + 2 Q^2)) m.

    E_D zeroes the off-diagonal entries.  f(m) = m exactly at beta = 0.
    """
    m = _check_interior(m)
    q = tap_resolvent(inst, m) if resolvent is None else resolvent
    q2 = q @ q
    d2 = (1.0 / (1.0 - m * m)) ** 2
    diag_q2 = np.diagonal(q2, axis1=-2, axis2=-1)
    tr_q2 = diag_q2.sum(axis=-1)
    c = inst.beta**2 / inst.n
    return (
        diag_q2 * d2 * m
        - c * tr_q2[..., None] * m
        - 2.0 * c * (q2 @ m[..., None])[..., 0]
    )


def weight_integrand(inst: SkInstance, m, resolvent: np.ndarray | None = None):
    """omega(m) = (Tr Q(m) + |m|^2) / 2, the Jarzynski log-weight rate."""
    m = _check_interior(m)
    q = tap_resolvent(inst, m) if resolvent is None else resolvent
    tr = np.trace(q, axis1=-2, axis2=-1)
    out = 0.5 * (tr + (m * m).sum(axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def delta_diag(inst: SkInstance, m, resolvent: np.ndarray | None = None) -> np.ndarray:
    """Diagonal drift-mismatch matrix E_D[Q^2] D^2 - (1 + beta^2 tr_n(Q^2)) I.

    Exactly zero at beta = 0 and at n = 1; its normalized Schatten-2 norm
    shrinks like n^{-1/2} under the spectral event.  Returns the (..., n)
    diagonal; wrap with np.diag for the matrix form.
    """
    m = _check_interior(m)
    q = tap_resolvent(inst, m) if resolvent is None else resolvent
    q2 = q @ q
    d2 = (1.0 / (1.0 - m * m)) ** 2
    diag_q2 = np.diagonal(q2, axis1=-2, axis2=-1)
    trn_q2 = diag_q2.sum(axis=-1) / inst.n
    return diag_q2 * d2 - (1.0 + inst.beta**2 * trn_q2)[..., None]


def delta_diag_norm(inst: SkInstance, m) -> float:
    """Normalized 2-norm |delta|_F / sqrt(n) of the diagnostic above."""
    d = delta_diag(inst, m)
    return float(np.sqrt((d * d).sum(axis=-1) / inst.n))
