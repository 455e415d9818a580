"""
ゲインの検証、H∞性能評価、ストリング安定性の判定

ゲインの合成(ILMI)は行わず、与えられたゲインの閉ループ性能を評価する。
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from platoon_shield import numerics
from platoon_shield.common.types import FloatArray
from platoon_shield.numerics import StateSpacePlant
from platoon_shield.platoon_model import ControllerGains, VehicleParams, build_follower

# 性能出力 z = [e, v]
PERFORMANCE_OUTPUT = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
DEFAULT_STRING_SLACK = 0.02


class NormKind(Enum):
    L2 = "2"
    LINF = "inf"


class Signal(Enum):
    E = "e"
    V = "v"
    A = "a"


@dataclass(frozen=True)
class PerformancePlant:
    """外乱 [ω_d, v_{i-1}+ω_v, û_{i-1}] から z = [e, v] への閉ループ系 (D = 0)"""

    plant: StateSpacePlant


@dataclass(frozen=True)
class StringStabilityReport:
    """
    Attributes
    ----------
    per_vehicle_norms : tuple[float, ...]
        車両ごとの信号ノルム
    monotone : bool
        worst_ratio <= 1 + slack
    worst_ratio : float
        max_i ||z_i|| / ||z_{i-1}|| (0/0 は 0)
    """

    signal: Signal
    p: NormKind
    per_vehicle_norms: tuple[float, ...]
    monotone: bool
    worst_ratio: float


def validate_gains(gains: ControllerGains, tau: float) -> bool:
    """kp > 0, kd > 0, kd > kp*tau"""
    return gains.is_valid_for(tau)


def performance_plant(params: VehicleParams, gains: ControllerGains) -> PerformancePlant:
    """
    Raises:
        GainValidationError: ゲインが条件を満たさない
    """
    a, b = build_follower(params, gains)
    c = PERFORMANCE_OUTPUT.copy()
    d = np.zeros((c.shape[0], b.shape[1]))
    return PerformancePlant(StateSpacePlant(a, b, c, d))


def closed_loop_hinf(
    params: VehicleParams,
    gains: ControllerGains,
    tol: float = numerics.DEFAULT_HINF_TOL,
) -> float:
    """
    外乱から性能出力への H∞ ゲイン

    Raises:
        GainValidationError: ゲインが条件を満たさない
        PreconditionError: 閉ループが Hurwitz でない
    """
    return numerics.hinf_norm(performance_plant(params, gains).plant, tol)


def signal_norm(z: FloatArray, p: NormKind, ts: float) -> float:
    """離散信号のノルム: L2 は sqrt(Ts Σ z^2)、L∞ は max |z|"""
    if z.size == 0:
        return 0.0
    if p is NormKind.L2:
        return float(np.sqrt(ts * np.sum(z * z)))
    return float(np.max(np.abs(z)))


def string_stability_check(
    traces: Sequence[Sequence[float]] | FloatArray,
    signal: Signal,
    p: NormKind,
    ts: float,
    slack: float = DEFAULT_STRING_SLACK,
) -> StringStabilityReport:
    """
    車両1..mの信号列からストリング安定性を判定する

    traces[i] は i 番目の車両の信号 z_i(k)。初期値は平衡(z_i(0)=0)を前提とする。

    Raises:
        ValueError: 信号長が揃っていない
    """
    lengths = {len(t) for t in traces}
    if len(lengths) > 1:
        raise ValueError(f"traces must share length, got lengths {sorted(lengths)}")
    norms = tuple(signal_norm(np.asarray(t, dtype=np.float64), p, ts) for t in traces)

    worst = 0.0
    for prev, cur in zip(norms, norms[1:]):
        if prev == 0.0:
            ratio = 0.0 if cur == 0.0 else float("inf")
        else:
            ratio = cur / prev
        worst = max(worst, ratio)
    return StringStabilityReport(
        signal=signal,
        p=p,
        per_vehicle_norms=norms,
        monotone=worst <= 1.0 + slack,
        worst_ratio=worst,
    )
