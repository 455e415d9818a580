"""
車両・仮想先導車のモデル

状態は x = [e, v, a, u] (車間誤差, 速度, 加速度, 制御器状態)。
追従車は閉ループ形式を正とし、入力は [ω_d, v_{i-1}+ω_v, û_{i-1}] の3つ。
センサ雑音なしのモデルは ω_d = ω_v = 0, û = u_{i-1} とすれば得られる。

Note:
    H∞設計用に書き直した開ループ形式 (Ã_i) は閉ループ形式と符号・位置が
    一致しない箇所がある。ここでは閉ループ形式を採用し、Ã_i は使わない。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from platoon_shield import numerics
from platoon_shield.common.errors import (
    ConfigValidationError,
    DimensionError,
    GainValidationError,
)
from platoon_shield.common.types import FloatArray

STATE_DIM = 4
FOLLOWER_INPUTS = 3
LEADER_INPUTS = 1


@dataclass(frozen=True)
class VehicleParams:
    """
    車両パラメータ

    Attributes
    ----------
    h : float
        車間時間 [s] (> 0)
    tau : float
        駆動系の時定数 [s] (> 0)
    r : float
        停止時の車間距離 [m]
    L : float
        車長 [m] (>= 0)
    """

    h: float
    tau: float
    r: float = 0.0
    L: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.h) and self.h > 0.0):
            raise ConfigValidationError("h > 0", f"h={self.h}")
        if not (np.isfinite(self.tau) and self.tau > 0.0):
            raise ConfigValidationError("tau > 0", f"tau={self.tau}")
        if not (np.isfinite(self.L) and self.L >= 0.0):
            raise ConfigValidationError("L >= 0", f"L={self.L}")
        if not np.isfinite(self.r):
            raise ConfigValidationError("r finite", f"r={self.r}")


@dataclass(frozen=True)
class ControllerGains:
    """PD型の制御ゲイン (k_dd = 0)"""

    kp: float
    kd: float

    def is_valid_for(self, tau: float) -> bool:
        return self.kp > 0.0 and self.kd > 0.0 and self.kd > self.kp * tau

    def require_valid_for(self, tau: float) -> None:
        if not self.is_valid_for(tau):
            raise GainValidationError(self.kp, self.kd, tau)


@dataclass(frozen=True)
class VehicleState:
    e: float
    v: float
    a: float
    u: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"VehicleState must be finite, got {self}")

    def as_array(self) -> FloatArray:
        return np.array([self.e, self.v, self.a, self.u], dtype=np.float64)

    @classmethod
    def from_array(cls, x: FloatArray) -> "VehicleState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))

    @classmethod
    def equilibrium(cls, v0: float = 0.0) -> "VehicleState":
        """車間誤差0、共通速度 v0、加速度0の平衡状態"""
        return cls(0.0, v0, 0.0, 0.0)


@dataclass(frozen=True)
class DiscretePlant:
    """離散時間モデル x(k+1) = Ad x(k) + Bd ε(k)"""

    Ad: FloatArray
    Bd: FloatArray
    Ts: float

    def __post_init__(self) -> None:
        if self.Ad.shape != (STATE_DIM, STATE_DIM) or self.Bd.shape[0] != STATE_DIM:
            raise DimensionError(
                f"expected 4-state model, got Ad{self.Ad.shape} Bd{self.Bd.shape}"
            )
        if not self.Ts > 0.0:
            raise ConfigValidationError("Ts > 0", f"Ts={self.Ts}")

    @property
    def input_dim(self) -> int:
        return self.Bd.shape[1]


def build_follower(
    params: VehicleParams, gains: ControllerGains
) -> tuple[FloatArray, FloatArray]:
    """
    追従車の閉ループ連続時間モデル (A_ci, B̃_i)

    Returns:
        (Ac 4x4, Bc 4x3) 入力は [ω_d, v_{i-1}+ω_v, û_{i-1}]

    Raises:
        GainValidationError: kp > 0, kd > 0, kd > kp*tau を満たさない
    """
    gains.require_valid_for(params.tau)
    h, tau, kp, kd = params.h, params.tau, gains.kp, gains.kd
    ac = np.array(
        [
            [0.0, -1.0, -h, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, -1.0 / tau, 1.0 / tau],
            [kp / h, -kd / h, -kd, -1.0 / h],
        ]
    )
    bc = np.zeros((STATE_DIM, FOLLOWER_INPUTS))
    bc[0, 1] = 1.0
    bc[3, :] = [kp / h, kd / h, 1.0 / h]
    return ac, bc


def build_leader(params: VehicleParams) -> tuple[FloatArray, FloatArray]:
    """
    仮想先導車 (i=0) のモデル (A_c0, B_c0)
    入力は運転者の要求加速度 ε_0。A_c0 は特異(e_0 は一定)。
    """
    h, tau = params.h, params.tau
    ac = np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, -1.0 / tau, 1.0 / tau],
            [0.0, 0.0, 0.0, -1.0 / h],
        ]
    )
    bc = np.array([[0.0], [0.0], [0.0], [1.0 / h]])
    return ac, bc


def discretize(ac: FloatArray, bc: FloatArray, ts: float) -> DiscretePlant:
    ad, bd = numerics.zoh_discretize(ac, bc, ts)
    return DiscretePlant(ad, bd, ts)


def follower_plant(
    params: VehicleParams, gains: ControllerGains, ts: float
) -> DiscretePlant:
    return discretize(*build_follower(params, gains), ts)


def leader_plant(params: VehicleParams, ts: float) -> DiscretePlant:
    return discretize(*build_leader(params), ts)


def step_array(x: FloatArray, eps: FloatArray, plant: DiscretePlant) -> FloatArray:
    """配列版の1ステップ更新 (シミュレーションのホットパス用)"""
    return plant.Ad @ x + plant.Bd @ eps


def step(
    state: VehicleState, inputs: Sequence[float] | FloatArray, plant: DiscretePlant
) -> VehicleState:
    """
    x(k+1) = Ad x(k) + Bd ε(k)

    Raises:
        DimensionError: 入力の長さがモデルと一致しない
    """
    eps = np.asarray(inputs, dtype=np.float64).reshape(-1)
    if eps.shape[0] != plant.input_dim:
        raise DimensionError(
            f"input length {eps.shape[0]} does not match plant inputs {plant.input_dim}"
        )
    return VehicleState.from_array(step_array(state.as_array(), eps, plant))


def desired_distance(params: VehicleParams, v: float) -> float:
    """目標車間距離 r + h v (負の速度でもそのまま計算する)"""
    return params.r + params.h * v
