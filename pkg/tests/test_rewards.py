"""Composite process reward: token consistency, trajectory alignment,
format compliance, and their weighted mix."""

import math

import numpy as np
import pytest
from helpers import random_chunk, rng_for, spec_for
from hypothesis import given, settings
from hypothesis import strategies as st

from llrft.codec import COMPRESSION_RLE, decode, encode, format_check
from llrft.rewards import RewardConfig, ctar, fcr, mdpr, qacr

# Geometry whose bin centers land on round numbers: Q=4 over [0.05, 0.45]
# puts pose centers at 0.1, 0.2, 0.3, 0.4.
ALIGNED = spec_for(h=1, d=3, q=4, lower=[0.05, 0.05, 0.0], upper=[0.45, 0.45, 1.0])
# pred pose decodes to (0.1, 0.2), gt pose to (0.2, 0.4), grippers agree
PRED = [0, 1, 0]
GT = [1, 3, 0]

RLE_SPEC = spec_for(h=2, d=2, q=4, compression=COMPRESSION_RLE)


def test_token_consistency_hand_value():
    # six pred tokens vs four gt tokens, matching at two of the four
    # compared positions: 2 / max(6, 4)
    pred, gt = [0, 5, 0, 4, 2, 4], [0, 6, 2, 4]
    assert format_check(pred, RLE_SPEC) and format_check(gt, RLE_SPEC)
    assert qacr(pred, gt, RLE_SPEC) == pytest.approx(0.333333, abs=1e-6)


def test_alignment_hand_value():
    cfg = RewardConfig()
    # mean abs pose error 0.15 -> 0.8 * exp(-0.75) + 0.2
    assert ctar(PRED, GT, ALIGNED, cfg) == pytest.approx(0.577893, abs=1e-6)
    expected = cfg.beta * math.exp(-cfg.alpha * 0.15) + (1 - cfg.beta)
    assert ctar(PRED, GT, ALIGNED, cfg) == pytest.approx(expected, abs=1e-12)


def test_composite_hand_value():
    breakdown = mdpr(PRED, GT, ALIGNED, RewardConfig())
    assert breakdown.qacr == pytest.approx(0.333333, abs=1e-6)
    assert breakdown.ctar == pytest.approx(0.577893, abs=1e-6)
    assert breakdown.fcr == 1.0
    assert breakdown.mdpr == pytest.approx(0.506701, abs=1e-6)


def test_perfect_prediction_scores_the_maximum():
    breakdown = mdpr(GT, GT, ALIGNED, RewardConfig())
    assert breakdown.qacr == 1.0
    assert breakdown.ctar == 1.0
    assert breakdown.mdpr == pytest.approx(1.1, abs=1e-12)


def test_invalid_prediction_zeroes_every_component():
    for bad in ([], [0, 1], [99, 0, 0], [0, 1, 2, 3]):
        breakdown = mdpr(bad, GT, ALIGNED, RewardConfig())
        assert (breakdown.qacr, breakdown.ctar, breakdown.fcr, breakdown.mdpr) \
            == (0.0, 0.0, 0.0, 0.0)


def test_malformed_ground_truth_is_an_error():
    for fn in (lambda: qacr(GT, [0, 1], ALIGNED),
               lambda: ctar(GT, [0, 1], ALIGNED, RewardConfig()),
               lambda: mdpr(GT, [0, 1], ALIGNED, RewardConfig())):
        with pytest.raises(ValueError, match="ground truth"):
            fn()


def test_format_compliance_is_binary():
    assert fcr(GT, ALIGNED) == 1.0
    assert fcr([], ALIGNED) == 0.0
    assert fcr([0, 7, 1], RLE_SPEC) == 0.0  # odd-length compressed stream


def test_alignment_decays_with_pose_error():
    cfg = RewardConfig()
    # gt at bin 0; predictions drift one bin at a time
    spec = spec_for(h=1, d=2, q=8)
    gt = [0, 0]
    values = [ctar([b, 0], gt, spec, cfg) for b in range(8)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_gripper_mismatch_costs_the_grip_share():
    cfg = RewardConfig(beta=0.8)
    same = ctar([0, 0, 0], [0, 0, 0], ALIGNED, cfg)
    flipped = ctar([0, 0, 3], [0, 0, 0], ALIGNED, cfg)
    assert same == pytest.approx(1.0, abs=1e-12)
    assert flipped == pytest.approx(cfg.beta, abs=1e-12)


def test_consistency_denominator_is_symmetric():
    pred, gt = [0, 5, 0, 4, 2, 4], [0, 6, 2, 4]
    assert qacr(pred, gt, RLE_SPEC) == qacr(gt, pred, RLE_SPEC)


@settings(deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(2, 16),
       h=st.integers(1, 4), d=st.integers(2, 4),
       compression=st.sampled_from(["none", "run-length"]))
def test_components_stay_in_their_ranges(seed, q, h, d, compression):
    spec = spec_for(h, d, q, compression)
    rng = rng_for(seed)
    cfg = RewardConfig()
    gt = encode(random_chunk(rng, spec), spec)
    pred = encode(random_chunk(rng, spec), spec)
    if rng.random() < 0.3:  # corrupt some predictions
        pred = pred + [0]
    breakdown = mdpr(pred, gt, spec, cfg)
    assert 0.0 <= breakdown.qacr <= 1.0
    assert 0.0 <= breakdown.ctar <= 1.0
    assert breakdown.fcr in (0.0, 1.0)
    assert 0.0 <= breakdown.mdpr <= 1.0 + cfg.lam
    assert breakdown.mdpr == pytest.approx(
        cfg.omega * breakdown.qacr + (1 - cfg.omega) * breakdown.ctar
        + cfg.lam * breakdown.fcr, abs=1e-12)


def test_alignment_equals_one_on_identical_decodes():
    rng = rng_for(9)
    spec = spec_for(h=3, d=3, q=8)
    for _ in range(20):
        gt = encode(random_chunk(rng, spec), spec)
        assert ctar(gt, gt, spec, RewardConfig()) == pytest.approx(1.0, abs=1e-12)


def test_weights_validate_and_round_trip():
    with pytest.raises(ValueError):
        RewardConfig(alpha=0.0)
    with pytest.raises(ValueError):
        RewardConfig(beta=1.5)
    with pytest.raises(ValueError):
        RewardConfig(omega=-0.1)
    with pytest.raises(ValueError):
        RewardConfig(lam=-0.1)
    cfg = RewardConfig(alpha=2.0, beta=0.5, omega=0.9, lam=0.2)
    data = cfg.to_json_dict()
    assert data == {"alpha": 2.0, "beta": 0.5, "omega": 0.9, "lambda": 0.2}
    assert RewardConfig.from_json_dict(data) == cfg
    assert RewardConfig.reference() == RewardConfig(alpha=5.0, beta=0.8,
                                                    omega=0.7, lam=0.1)


def test_extreme_mix_weights_isolate_components():
    only_consistency = mdpr(PRED, GT, ALIGNED, RewardConfig(omega=1.0, lam=0.0))
    only_alignment = mdpr(PRED, GT, ALIGNED, RewardConfig(omega=0.0, lam=0.0))
    assert only_consistency.mdpr == pytest.approx(only_consistency.qacr, abs=1e-12)
    assert only_alignment.mdpr == pytest.approx(only_alignment.ctar, abs=1e-12)
