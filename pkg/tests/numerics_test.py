import numpy as np
import pytest

from platoon_shield import numerics
from platoon_shield.common.errors import DimensionError, DomainError, PreconditionError
from platoon_shield.numerics import StateSpacePlant
from platoon_shield.platoon_model import (
    ControllerGains,
    VehicleParams,
    build_follower,
    build_leader,
)

OPTIMAL = ControllerGains(kp=5.002, kd=305.1862)
PARAMS = VehicleParams(h=0.5, tau=0.1)


def series_zoh(a: np.ndarray, b: np.ndarray, ts: float, terms: int = 80):
    """Ad = Σ (A Ts)^k / k!, Bd = Σ A^k Ts^(k+1) / (k+1)! B"""
    n = a.shape[0]
    ad = np.zeros((n, n))
    acc = np.zeros((n, n))
    term = np.eye(n)  # (A Ts)^k / k!
    for k in range(terms):
        ad += term
        acc += term * ts / (k + 1)
        term = term @ a * ts / (k + 1)
    return ad, acc @ b


def test_mat_exp_zero_is_identity():
    assert np.array_equal(numerics.mat_exp(np.zeros((3, 3))), np.eye(3))


def test_mat_exp_diagonal():
    out = numerics.mat_exp(np.diag([-1.0, 2.0]), t=0.5)
    assert out == pytest.approx(np.diag(np.exp([-0.5, 1.0])), rel=1e-12)


def test_mat_exp_rejects_non_square():
    with pytest.raises(DimensionError):
        numerics.mat_exp(np.zeros((2, 3)))


def test_mat_exp_rejects_nan():
    with pytest.raises(DomainError):
        numerics.mat_exp(np.array([[np.nan]]))


def test_zoh_matches_series_on_random_stable_systems():
    rng = np.random.default_rng(20240601)
    for _ in range(100):
        a = rng.normal(size=(4, 4))
        a -= (numerics.spectral_abscissa(a) + 1.0) * np.eye(4)
        b = rng.normal(size=(4, 2))
        ad, bd = numerics.zoh_discretize(a, b, 0.01)
        ad_ref, bd_ref = series_zoh(a, b, 0.01)
        assert np.max(np.abs(ad - ad_ref)) < 1e-10
        assert np.max(np.abs(bd - bd_ref)) < 1e-10


def test_zoh_matches_series_on_follower():
    ac, bc = build_follower(PARAMS, OPTIMAL)
    ad, bd = numerics.zoh_discretize(ac, bc, 0.01)
    ad_ref, bd_ref = series_zoh(ac, bc, 0.01)
    assert np.max(np.abs(ad - ad_ref)) < 1e-10
    assert np.max(np.abs(bd - bd_ref)) < 1e-10


def test_zoh_handles_singular_leader():
    ac, bc = build_leader(PARAMS)
    ad, bd = numerics.zoh_discretize(ac, bc, 0.01)
    ad_ref, bd_ref = series_zoh(ac, bc, 0.01)
    assert np.max(np.abs(ad - ad_ref)) < 1e-10
    assert np.max(np.abs(bd - bd_ref)) < 1e-10
    # e_0 は一定
    assert ad[0] == pytest.approx([1.0, 0.0, 0.0, 0.0])
    assert bd[0, 0] == 0.0


def test_zoh_rejects_bad_ts():
    with pytest.raises(DomainError):
        numerics.zoh_discretize(np.eye(2), np.ones((2, 1)), 0.0)


def test_zoh_rejects_row_mismatch():
    with pytest.raises(DimensionError):
        numerics.zoh_discretize(np.eye(2), np.ones((3, 1)), 0.01)


def test_is_hurwitz():
    assert numerics.is_hurwitz(np.diag([-1.0, -2.0]))
    assert not numerics.is_hurwitz(np.diag([1.0, -1.0]))
    assert not numerics.is_hurwitz(np.zeros((2, 2)))


def test_follower_closed_loop_is_hurwitz():
    ac, _ = build_follower(PARAMS, OPTIMAL)
    assert numerics.is_hurwitz(ac)


def test_hinf_first_order_lowpass():
    plant = StateSpacePlant([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    assert numerics.hinf_norm(plant) == pytest.approx(1.0, abs=1e-3)


def test_hinf_resonant_second_order():
    zeta = 0.1
    plant = StateSpacePlant(
        [[0.0, 1.0], [-1.0, -2.0 * zeta]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]]
    )
    expected = 1.0 / (2.0 * zeta * np.sqrt(1.0 - zeta**2))
    assert numerics.hinf_norm(plant, tol=1e-6) == pytest.approx(expected, rel=1e-4)


def test_hinf_with_feedthrough():
    plant = StateSpacePlant([[-1.0]], [[1.0]], [[1.0]], [[2.0]])
    # G(0) = 3 が最大
    assert numerics.hinf_norm(plant) == pytest.approx(3.0, abs=1e-3)


def test_hinf_rejects_unstable():
    plant = StateSpacePlant([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(PreconditionError):
        numerics.hinf_norm(plant)


def test_state_space_dimension_check():
    with pytest.raises(DimensionError):
        StateSpacePlant(np.eye(2), np.ones((2, 1)), np.ones((1, 3)), np.zeros((1, 1)))


def test_mat_exp_nilpotent():
    out = numerics.mat_exp(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.max(np.abs(out - np.array([[1.0, 1.0], [0.0, 1.0]]))) < 1e-12


def test_mat_exp_semigroup_on_random_stable_matrices():
    rng = np.random.default_rng(3141)
    for _ in range(50):
        a = rng.normal(size=(4, 4))
        a -= (numerics.spectral_abscissa(a) + 0.5) * np.eye(4)
        t1, t2 = rng.uniform(0.0, 1.0, 2)
        # ||A t|| <= 5
        a *= min(1.0, 5.0 / (np.linalg.norm(a, 2) * (t1 + t2)))
        lhs = numerics.mat_exp(a, t1 + t2)
        rhs = numerics.mat_exp(a, t1) @ numerics.mat_exp(a, t2)
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_spectral_abscissa_of_rotation_is_zero():
    assert numerics.spectral_abscissa([[0.0, 1.0], [-1.0, 0.0]]) == pytest.approx(0.0, abs=1e-12)


def test_spectral_abscissa_is_similarity_invariant():
    rng = np.random.default_rng(2718)
    for _ in range(50):
        a = rng.normal(size=(4, 4))
        t = np.eye(4) + 0.2 * rng.normal(size=(4, 4))
        b = t @ a @ np.linalg.inv(t)
        assert numerics.spectral_abscissa(b) == pytest.approx(numerics.spectral_abscissa(a), abs=1e-8)


@pytest.mark.parametrize(
    "plant",
    [
        StateSpacePlant([[0.0, 1.0], [-1.0, -0.2]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]]),
        StateSpacePlant([[0.0, 1.0], [-4.0, -0.4]], [[0.0], [1.0]], [[1.0, 1.0]], [[0.5]]),
    ],
)
def test_hinf_agrees_with_dense_sweep(plant):
    tol = 1e-6
    gamma = numerics.hinf_norm(plant, tol=tol)
    coarse, _ = numerics.frequency_sweep(plant)
    fine, _ = numerics.frequency_sweep(plant, 1e-1, 1e1, 100_000)
    peak = max(coarse, fine)
    # 掃引は下界
    assert peak <= gamma + 2 * tol
    assert gamma == pytest.approx(peak, abs=2 * tol + 1e-5 * peak)
