import numpy as np
import pytest

from platoon_shield import numerics
from platoon_shield.common.errors import GainValidationError
from platoon_shield.control_design import (
    NormKind,
    Signal,
    closed_loop_hinf,
    performance_plant,
    signal_norm,
    string_stability_check,
    validate_gains,
)
from platoon_shield.numerics import StateSpacePlant
from platoon_shield.platoon_model import ControllerGains, VehicleParams

PARAMS = VehicleParams(h=0.5, tau=0.1)
OPTIMAL = ControllerGains(kp=5.002, kd=305.1862)
COMPARISON = ControllerGains(kp=0.2, kd=0.7)


def test_validate_gains():
    assert validate_gains(OPTIMAL, 0.1)
    assert validate_gains(COMPARISON, 0.1)
    assert not validate_gains(ControllerGains(1.0, 0.05), 0.1)


def test_performance_plant_refuses_invalid_gains():
    with pytest.raises(GainValidationError):
        performance_plant(PARAMS, ControllerGains(1.0, 0.05))


def test_performance_plant_shape():
    p = performance_plant(PARAMS, OPTIMAL).plant
    assert p.A.shape == (4, 4)
    assert p.B.shape == (4, 3)
    assert p.C.shape == (2, 4)
    assert np.all(p.D == 0.0)


def test_hinf_optimal_gains():
    assert closed_loop_hinf(PARAMS, OPTIMAL) == pytest.approx(1.0198, rel=0.05)


def test_hinf_comparison_gains():
    assert closed_loop_hinf(PARAMS, COMPARISON) == pytest.approx(5.1, rel=0.05)


def test_hinf_ordering():
    assert closed_loop_hinf(PARAMS, OPTIMAL) < closed_loop_hinf(PARAMS, COMPARISON)


def test_signal_norm():
    z = np.ones(100)
    assert signal_norm(z, NormKind.L2, 0.01) == pytest.approx(1.0)
    assert signal_norm(np.array([1.0, -3.0, 2.0]), NormKind.LINF, 0.01) == 3.0
    assert signal_norm(np.array([]), NormKind.L2, 0.01) == 0.0


def test_string_stability_all_zero():
    report = string_stability_check(np.zeros((3, 50)), Signal.E, NormKind.L2, 0.01)
    assert report.monotone
    assert report.worst_ratio == 0.0


def test_string_stability_violation():
    report = string_stability_check([[1.0] * 10, [2.0] * 10], Signal.E, NormKind.L2, 0.01)
    assert not report.monotone
    assert report.worst_ratio == pytest.approx(2.0)


def test_string_stability_decreasing():
    traces = [[1.0, 1.0], [0.5, 0.5], [0.25, 0.25]]
    report = string_stability_check(traces, Signal.V, NormKind.LINF, 0.01, slack=0.0)
    assert report.monotone
    assert report.per_vehicle_norms == pytest.approx((1.0, 0.5, 0.25))


def test_string_stability_growth_from_zero():
    report = string_stability_check([[0.0, 0.0], [0.0, 0.1]], Signal.A, NormKind.LINF, 0.01)
    assert report.worst_ratio == float("inf")
    assert not report.monotone


def test_string_stability_length_mismatch():
    with pytest.raises(ValueError):
        string_stability_check([[1.0], [1.0, 2.0]], Signal.E, NormKind.L2, 0.01)


@pytest.mark.parametrize("gains", [OPTIMAL, COMPARISON])
def test_closed_loop_hinf_similarity_invariant(gains):
    tol = 1e-6
    p = performance_plant(PARAMS, gains).plant
    rng = np.random.default_rng(5)
    t = np.eye(4) + 0.1 * rng.normal(size=(4, 4))
    t_inv = np.linalg.inv(t)
    moved = StateSpacePlant(t @ p.A @ t_inv, t @ p.B, p.C @ t_inv, p.D)
    expected = closed_loop_hinf(PARAMS, gains, tol)
    assert numerics.hinf_norm(moved, tol) == pytest.approx(expected, abs=2 * tol + 1e-9 * expected)


@pytest.mark.parametrize("gains", [OPTIMAL, COMPARISON])
def test_closed_loop_hinf_scales_with_output(gains):
    tol = 1e-6
    p = performance_plant(PARAMS, gains).plant
    doubled = StateSpacePlant(p.A, p.B, 2.0 * p.C, p.D)
    expected = 2.0 * closed_loop_hinf(PARAMS, gains, tol)
    assert numerics.hinf_norm(doubled, tol) == pytest.approx(expected, abs=2 * tol)