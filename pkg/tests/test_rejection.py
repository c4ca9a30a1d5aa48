import math

import numpy as np
import pytest

from skgibbs.instance import rng_from_key
from skgibbs.rejection import (AcceptanceStarvationError, RejectionConfig,
                               WeightedSample, accept_loop, accept_mask,
                               calibrate, empirical_tail_constant,
                               log_accept_threshold, weight_histogram)


def test_quantile_fixture_small():
    # C1 = 1: the (1 - 1/6)-quantile of weights {1..6} is 5 (lower-nearest)
    cfg = RejectionConfig(C1=1.0, C2=1.0, calibration_draws=6)
    lw = np.log(np.arange(1.0, 7.0))
    log_r0, c1, c2 = calibrate(lw, cfg)
    assert np.isclose(log_r0, math.log(5.0))
    assert c1 == 1.0 and c2 == 1.0
    assert np.isclose(log_accept_threshold(log_r0, c2), math.log(40.0))


def test_quantile_is_permutation_invariant():
    cfg = RejectionConfig(C1=1.0, C2=1.0, calibration_draws=6)
    lw = np.log(np.array([4.0, 1.0, 6.0, 3.0, 5.0, 2.0]))
    log_r0, _, _ = calibrate(lw, cfg)
    assert np.isclose(log_r0, math.log(5.0))


def test_calibrate_accepts_weighted_samples():
    cfg = RejectionConfig(C1=1.0, C2=1.0, calibration_draws=4)
    draws = [WeightedSample(np.zeros(2), np.zeros(2), float(v))
             for v in (0.0, 1.0, 2.0, 3.0)]
    log_r0, _, _ = calibrate(draws, cfg)
    assert np.isclose(log_r0, 3.0)   # (1 - 1/6)-quantile of 4 points


def test_calibrate_requires_enough_draws():
    cfg = RejectionConfig(C1=1.0, C2=1.0, calibration_draws=10)
    with pytest.raises(ValueError):
        calibrate(np.zeros(5), cfg)
    with pytest.raises(ValueError):
        calibrate(np.zeros(0), cfg)


def test_empirical_tail_constant():
    assert empirical_tail_constant(np.zeros(100)) == 2.0   # floor
    lw = np.zeros(1000)
    lw[-10:] = np.log(50.0)
    assert empirical_tail_constant(lw) > 2.0


def test_accept_loop_geometric_attempts():
    # constant weight at half the threshold: acceptance probability 1/2
    cfg = RejectionConfig(C1=1.0, C2=1.0, calibration_draws=1)
    thresh = log_accept_threshold(0.0, 1.0)

    def source(i):
        return WeightedSample(np.zeros(1), np.zeros(1), thresh - math.log(2.0))

    tel = {}
    for s in range(500):
        accept_loop(source, cfg, 0.0, 1.0, seed=s, telemetry=tel)
    rate = tel["accepts"] / tel["attempts"]
    assert abs(rate - 0.5) < 0.07


def test_accept_loop_truncation_at_high_weight():
    # weights far above threshold accept deterministically on attempt one
    def source(i):
        return WeightedSample(np.zeros(1), np.zeros(1), 100.0)

    tel = {}
    out = accept_loop(source, RejectionConfig(C1=1.0, C2=1.0), 0.0, 1.0,
                      seed=0, telemetry=tel)
    assert tel["attempts"] == 1 and out.logweight == 100.0


def test_starvation():
    def source(i):
        return WeightedSample(np.zeros(1), np.zeros(1), -1e6)

    with pytest.raises(AcceptanceStarvationError) as e:
        accept_loop(source, RejectionConfig(C1=1.0, C2=1.0), 0.0, 1.0,
                    seed=1, max_attempts=200)
    assert e.value.attempts == 200


def test_accept_mask_matches_loop_semantics():
    rng = rng_from_key(2)
    lw = np.array([-math.log(2.0), 100.0, -1e6])
    mask = np.zeros(3)
    trials = 20_000
    for _ in range(trials):
        mask += accept_mask(lw, 0.0, 1.0 / 8.0, rng)   # threshold log(1*R0)=0
    rate = mask / trials
    assert abs(rate[0] - 0.5) < 0.02
    assert rate[1] == 1.0 and rate[2] == 0.0


def test_reweighting_recovers_target_law():
    # proposals uniform over two cells with weights 1 and 3; accepted draws
    # should follow (1/4, 3/4)
    rng = rng_from_key(3)
    N = 100_000
    cell = rng.integers(0, 2, N)
    lw = np.where(cell == 1, math.log(3.0), 0.0)
    keep = accept_mask(lw, math.log(3.0), 1.0 / 8.0, rng)   # threshold = max w
    kept = cell[keep]
    frac = kept.mean()
    se = math.sqrt(0.75 * 0.25 / kept.size)
    assert abs(frac - 0.75) <= 4 * se


def test_weight_histogram():
    h = weight_histogram(np.linspace(-3, 3, 1000), bins=10)
    assert sum(h["counts"]) == 1000
    assert len(h["log_edges"]) == 11


def test_threshold_requires_finite_scale():
    with pytest.raises(ValueError):
        accept_loop(lambda i: None, RejectionConfig(), float("inf"), 1.0, 0)
