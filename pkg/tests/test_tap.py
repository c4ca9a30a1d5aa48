import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skgibbs.instance import SkInstance, rng_from_key
from skgibbs.oracle import exact_summary
from skgibbs.tap import (TapDomainError, TapHessianError, atanh_stable,
                         binary_entropy, delta_diag, delta_diag_norm,
                         drift_correction, tap_free_energy, tap_gradient,
                         tap_hessian, tap_resolvent, weight_integrand)


def random_interior(n, seed, scale=0.8):
    return rng_from_key(seed).uniform(-scale, scale, n)


def legendre_form_energy(inst, m, y):
    """Independent re-implementation via the direct entropy sum."""
    p, q = (1 + m) / 2, (1 - m) / 2
    ent = -(p * np.log(p) + q * np.log(q)).sum()
    quad = float(m @ inst.A @ m)
    ons = inst.n * inst.beta**2 / 4 * (1 - (m @ m) / inst.n) ** 2
    return -inst.beta / 2 * quad - float(y @ m) - ent - ons


def test_energy_at_zero():
    inst = SkInstance.generate(6, 0.3, 1)
    val = tap_free_energy(inst, np.zeros(6), np.zeros(6))
    assert np.isclose(val, -6 * np.log(2) - 6 * 0.3**2 / 4)


def test_energy_n1_fixture():
    # sign convention: the tilt term enters with a minus so that the
    # stationary point is the Gibbs magnetization (tanh(y) at beta=0)
    inst = SkInstance(1, 0.0, np.zeros((1, 1)))
    val = tap_free_energy(inst, np.array([0.5]), np.array([1.0]))
    assert np.isclose(val, -0.5 - binary_entropy(np.array([0.5]))[0])


def test_energy_matches_independent_form():
    inst = SkInstance.generate(8, 0.3, 2)
    m = random_interior(8, 3)
    y = rng_from_key(4).normal(size=8)
    assert abs(tap_free_energy(inst, m, y)
               - legendre_form_energy(inst, m, y)) < 1e-12


def test_gradient_at_zero_is_minus_tilt():
    inst = SkInstance.generate(5, 0.3, 5)
    y = rng_from_key(6).normal(size=5)
    assert np.allclose(tap_gradient(inst, np.zeros(5), y), -y)


def test_gradient_root_is_oracle_magnetization_beta0():
    inst = SkInstance(1, 0.0, np.zeros((1, 1)))
    y = np.array([1.0])
    m = np.tanh(y)
    assert np.max(np.abs(tap_gradient(inst, m, y))) < 1e-14
    assert np.isclose(m[0], exact_summary(inst, y).m[0])


def test_gradient_finite_difference():
    inst = SkInstance.generate(8, 0.3, 7)
    m = random_interior(8, 8)
    y = rng_from_key(9).normal(size=8)
    g = tap_gradient(inst, m, y)
    h = 1e-6
    eye = np.eye(8)
    fd = np.array([
        (tap_free_energy(inst, m + h * eye[i], y)
         - tap_free_energy(inst, m - h * eye[i], y)) / (2 * h)
        for i in range(8)
    ])
    assert np.max(np.abs(g - fd)) <= 1e-6 * (1 + np.abs(g).max())


def test_resolvent_closed_forms():
    inst = SkInstance.generate(6, 0.3, 10)
    q0 = tap_resolvent(inst, np.zeros(6))
    expect = np.linalg.inv((1 + 0.3**2) * np.eye(6) - 0.3 * inst.A)
    assert np.allclose(q0, expect, atol=1e-12)
    i0 = SkInstance(6, 0.0, np.zeros((6, 6)))
    m = random_interior(6, 11)
    assert np.allclose(tap_resolvent(i0, m), np.diag(1 - m**2), atol=1e-14)


def test_resolvent_vs_finite_difference_hessian():
    inst = SkInstance.generate(8, 0.3, 12)
    m = random_interior(8, 13, scale=0.6)
    y = np.zeros(8)
    h = 1e-6
    eye = np.eye(8)
    fd_h = np.array([
        (tap_gradient(inst, m + h * eye[i], y)
         - tap_gradient(inst, m - h * eye[i], y)) / (2 * h)
        for i in range(8)
    ])
    q = tap_resolvent(inst, m)
    assert np.max(np.abs(q @ fd_h - np.eye(8))) < 1e-4


def test_hessian_error_carries_eigenvalue():
    inst = SkInstance(3, 0.45, 5.0 * np.eye(3))
    with pytest.raises(TapHessianError) as e:
        tap_resolvent(inst, np.zeros(3))
    assert e.value.min_eigenvalue < 0


def test_domain_error():
    inst = SkInstance.generate(3, 0.2, 14)
    with pytest.raises(TapDomainError):
        tap_free_energy(inst, np.array([0.0, 1.0, 0.0]), np.zeros(3))


def test_drift_trivials():
    inst = SkInstance.generate(5, 0.3, 15)
    assert np.allclose(drift_correction(inst, np.zeros(5)), 0.0, atol=1e-14)
    i0 = SkInstance(5, 0.0, np.zeros((5, 5)))
    m = random_interior(5, 16)
    assert np.allclose(drift_correction(i0, m), m, atol=1e-13)


def test_drift_residual_bounded_n200():
    inst = SkInstance.generate(200, 0.3, 17)
    assert inst.spectral_event
    m = random_interior(200, 18, scale=0.7)
    f = drift_correction(inst, m)
    assert np.linalg.norm(m - f) <= 10.0


def test_weight_integrand_closed_forms():
    i0 = SkInstance(4, 0.0, np.zeros((4, 4)))
    assert np.isclose(weight_integrand(i0, np.zeros(4)), 2.0)
    inst = SkInstance.generate(4, 0.3, 19)
    expect = 0.5 * np.trace(
        np.linalg.inv((1 + 0.3**2) * np.eye(4) - 0.3 * inst.A)
    )
    assert np.isclose(weight_integrand(inst, np.zeros(4)), expect)


def test_weight_drift_duality():
    # directional derivative of omega equals <m - f(m), v>
    inst = SkInstance.generate(8, 0.3, 20)
    m = random_interior(8, 21, scale=0.6)
    v = rng_from_key(22).normal(size=8)
    v /= np.linalg.norm(v)
    h = 1e-6
    fd = (weight_integrand(inst, m + h * v)
          - weight_integrand(inst, m - h * v)) / (2 * h)
    assert abs(fd - float((m - drift_correction(inst, m)) @ v)) < 1e-5


def test_delta_diag_trivials():
    i0 = SkInstance(5, 0.0, np.zeros((5, 5)))
    m = random_interior(5, 23)
    assert np.allclose(delta_diag(i0, m), 0.0, atol=1e-13)
    # at n=1 the statistic is a fixed scalar function, finite but not zero
    i1 = SkInstance(1, 0.3, np.array([[0.4]]))
    assert np.all(np.isfinite(delta_diag(i1, np.array([0.3]))))


def test_delta_diag_norm_shrinks():
    norms = []
    for n in (64, 256):
        inst = SkInstance.generate(n, 0.25, 24)
        assert inst.spectral_event
        norms.append(delta_diag_norm(inst, random_interior(n, 25, 0.5)))
    assert norms[1] < norms[0]


def test_spectral_sandwich_small():
    inst = SkInstance.generate(50, 0.3, 26)
    assert inst.spectral_event
    m = random_interior(50, 27, scale=0.9)
    q = tap_resolvent(inst, m)
    d_half = np.diag(np.sqrt(1.0 / (1.0 - m**2)))
    ev = np.linalg.eigvalsh(d_half @ q @ d_half)
    assert ev.min() >= 0.25 - 1e-10
    assert ev.max() <= 2.0 / inst.gamma + 1e-10
    assert np.linalg.norm(q, 2) <= 1.0 / inst.gamma + 1e-10


def test_resolvent_lipschitz_probe():
    inst = SkInstance.generate(40, 0.3, 28)
    rng = rng_from_key(29)
    ratios = []
    for _ in range(20):
        m = rng.uniform(-0.7, 0.7, 40)
        w = np.clip(m + rng.normal(scale=0.05, size=40), -0.95, 0.95)
        dq = np.linalg.norm(tap_resolvent(inst, m) - tap_resolvent(inst, w))
        ratios.append(dq / np.linalg.norm(m - w))
    assert max(ratios) < 100.0


def test_batched_consistency():
    inst = SkInstance.generate(6, 0.3, 30)
    M = rng_from_key(31).uniform(-0.8, 0.8, (4, 6))
    Y = rng_from_key(32).normal(size=(4, 6))
    e = tap_free_energy(inst, M, Y)
    g = tap_gradient(inst, M, Y)
    q = tap_resolvent(inst, M)
    f = drift_correction(inst, M)
    w = weight_integrand(inst, M)
    for i in range(4):
        assert np.isclose(e[i], tap_free_energy(inst, M[i], Y[i]))
        assert np.allclose(g[i], tap_gradient(inst, M[i], Y[i]))
        assert np.allclose(q[i], tap_resolvent(inst, M[i]))
        assert np.allclose(f[i], drift_correction(inst, M[i]))
        assert np.isclose(w[i], weight_integrand(inst, M[i]))


def test_atanh_stable_near_one():
    m = np.array([1 - 1e-15])
    assert np.isclose(atanh_stable(m)[0], np.arctanh(m)[0])
    assert np.isfinite(atanh_stable(m)[0])


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_gradient_energy_consistency_property(seed):
    rng = rng_from_key(seed)
    n = int(rng.integers(2, 7))
    inst = SkInstance.generate(n, float(rng.uniform(0, 0.45)), seed + 1)
    m = rng.uniform(-0.9, 0.9, n)
    y = rng.normal(size=n)
    h = 1e-6
    eye = np.eye(n)
    g = tap_gradient(inst, m, y)
    fd = np.array([
        (tap_free_energy(inst, m + h * eye[i], y)
         - tap_free_energy(inst, m - h * eye[i], y)) / (2 * h)
        for i in range(n)
    ])
    assert np.max(np.abs(g - fd)) <= 1e-5 * (1 + np.abs(g).max())


def test_hessian_is_gradient_jacobian_shape():
    inst = SkInstance.generate(5, 0.2, 33)
    m = random_interior(5, 34)
    h = tap_hessian(inst, m)
    assert h.shape == (5, 5)
    assert np.allclose(h, h.T)
