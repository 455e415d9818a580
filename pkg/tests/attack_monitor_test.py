import numpy as np
import pytest

from platoon_shield.attack_monitor import (
    MonitorThresholds,
    ReferenceRule,
    detect,
    detection_thresholds,
    isolate,
    isolate_with_bounds,
    monitor_frame,
    select_reference,
)
from platoon_shield.fusion import fuse, noise_bound_inf
from platoon_shield.v2v_link import ChannelModel

CHANNELS = tuple(ChannelModel(b) for b in (0.1, 0.2, 0.3))


def test_detection_thresholds_example():
    assert detection_thresholds(CHANNELS) == pytest.approx([0.4, 0.5, 0.6])


def test_detect_large_injection():
    detected, flagged = detect([1.0, 1.05, 9.0], detection_thresholds(CHANNELS))
    assert detected
    assert 2 in flagged


def test_detect_length_mismatch():
    with pytest.raises(ValueError):
        detect([1.0, 2.0], [0.1, 0.2, 0.3])


def test_isolate_attacked_channel():
    values = [1.0, 1.05, 9.0]
    out = fuse(values, 1, noise_bound_inf(CHANNELS))
    j_ref, isolated = isolate(values, out.sigma, CHANNELS)
    assert j_ref == 0
    assert isolated == (2,)


def test_select_reference_rules():
    assert select_reference((2, 0, 1)) == 0
    rng = np.random.default_rng(0)
    assert select_reference((1, 2), ReferenceRule.RANDOM, rng) in (1, 2)
    with pytest.raises(ValueError):
        select_reference((1, 2), ReferenceRule.RANDOM)
    with pytest.raises(ValueError):
        select_reference(())


def test_monitor_frame_combines_detect_and_isolate():
    values = [2.0, 2.1, -4.0]
    out = fuse(values, 1, noise_bound_inf(CHANNELS))
    verdict = monitor_frame(values, out, CHANNELS)
    assert verdict.detected
    assert verdict.isolated == (2,)
    assert verdict.reference_channel not in verdict.isolated


def test_no_false_alarm_on_attack_free_frames():
    rng = np.random.default_rng(777)
    bounds = np.array([c.noise_bound for c in CHANNELS])
    thresholds = MonitorThresholds.from_channels(CHANNELS)
    nu_inf = noise_bound_inf(CHANNELS)
    frames = 10_000
    u = rng.uniform(-20.0, 20.0, frames)
    values = u[:, None] + rng.uniform(-bounds, bounds, (frames, len(bounds)))
    for f in range(frames):
        out = fuse(values[f], 1, nu_inf)
        verdict = monitor_frame(values[f], out, CHANNELS, thresholds)
        assert not verdict.detected
        assert verdict.flagged_by_detection == ()
        assert verdict.isolated == ()


def test_detect_flags_every_channel_around_outlier():
    detected, flagged = detect([1.0, 1.01, 5.0], [0.4, 0.5, 0.6])
    assert detected
    assert flagged == (0, 1, 2)


def test_detect_small_spread_is_clean():
    assert detect([1.0, 1.05, 0.95], [0.4, 0.5, 0.6]) == (False, ())


def test_isolate_with_bounds_matches_isolate():
    values = [1.0, 1.05, 9.0]
    sigma = fuse(values, 1, noise_bound_inf(CHANNELS)).sigma
    bounds = MonitorThresholds.from_channels(CHANNELS).isolation_base
    assert bounds == pytest.approx([0.1, 0.2, 0.3])
    assert isolate_with_bounds(values, sigma, bounds) == isolate(values, sigma, CHANNELS)
    with pytest.raises(ValueError):
        isolate_with_bounds(values, sigma, bounds[:2])


def test_monitor_frame_isolates_with_given_thresholds():
    values = [1.0, 1.05, 9.0]
    out = fuse(values, 1, noise_bound_inf(CHANNELS))
    loose = MonitorThresholds(
        detection=detection_thresholds(CHANNELS),
        isolation_base=np.full(3, 10.0),
    )
    verdict = monitor_frame(values, out, CHANNELS, loose)
    assert verdict.detected
    assert verdict.isolated == ()
    assert monitor_frame(values, out, CHANNELS).isolated == (2,)
