"""
攻撃の検知と攻撃チャネルの分離

検知: 全チャネル平均との差が τ^d_j = ||ν||∞ + ||ν_j||∞ を超えたら攻撃あり。
分離: 融合で採用された σ から参照チャネル j* を選び、
      |U_j* - U_j| > ||ν_j*||∞ + ||ν_j||∞ のチャネルを攻撃チャネルとする。
どちらも十分条件のみで、見逃しはあり得る(誤検知はない)。
監視結果は評価用で、制御には融合結果だけを使う。
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from platoon_shield.common.types import ChannelSet, FloatArray
from platoon_shield.fusion import FusionOutcome, noise_bound_inf
from platoon_shield.v2v_link import ChannelModel


class ReferenceRule(Enum):
    """参照チャネル j* の選び方"""

    SMALLEST = "smallest"
    RANDOM = "random"


@dataclass(frozen=True)
class MonitorThresholds:
    detection: FloatArray
    isolation_base: FloatArray

    @classmethod
    def from_channels(cls, channels: Sequence[ChannelModel]) -> "MonitorThresholds":
        return cls(
            detection=detection_thresholds(channels),
            isolation_base=channel_bounds(channels),
        )


@dataclass(frozen=True)
class MonitorVerdict:
    """
    1フレーム分の監視結果

    flagged_by_detection はチャネル別の検知フラグ(診断用)で、分離結果としては使わない。
    isolated に reference_channel は含まれない。
    """

    detected: bool
    flagged_by_detection: ChannelSet
    isolated: ChannelSet
    reference_channel: int


def channel_bounds(channels: Sequence[ChannelModel]) -> FloatArray:
    return np.array([c.noise_bound for c in channels], dtype=np.float64)


def detection_thresholds(channels: Sequence[ChannelModel]) -> FloatArray:
    """τ^d_j = ||ν||∞ + ||ν_j||∞"""
    return noise_bound_inf(channels) + channel_bounds(channels)


def detect(
    values: Sequence[float] | FloatArray, thresholds: Sequence[float] | FloatArray
) -> tuple[bool, ChannelSet]:
    """
    全チャネル平均に対する残差で攻撃を検知する

    Returns:
        (検知したか, 残差がしきい値を超えたチャネル)
    """
    u = np.asarray(values, dtype=np.float64)
    tau = np.asarray(thresholds, dtype=np.float64)
    if u.shape != tau.shape:
        raise ValueError(f"length mismatch: values {u.shape}, thresholds {tau.shape}")
    residual = np.abs(u.mean() - u)
    flagged = tuple(int(j) for j in np.flatnonzero(residual > tau))
    return len(flagged) > 0, flagged


def select_reference(
    sigma: ChannelSet,
    rule: ReferenceRule = ReferenceRule.SMALLEST,
    rng: np.random.Generator | None = None,
) -> int:
    if not sigma:
        raise ValueError("sigma must be non-empty")
    if rule is ReferenceRule.RANDOM:
        if rng is None:
            raise ValueError("random reference rule requires an rng")
        return int(sigma[int(rng.integers(len(sigma)))])
    return int(min(sigma))


def isolate(
    values: Sequence[float] | FloatArray,
    sigma: ChannelSet,
    channels: Sequence[ChannelModel],
    rule: ReferenceRule = ReferenceRule.SMALLEST,
    rng: np.random.Generator | None = None,
) -> tuple[int, ChannelSet]:
    """
    参照チャネルとの比較で攻撃チャネルを分離する

    Args:
        values: 受信値 U
        sigma: 融合で採用された部分集合
        channels: 各チャネルの雑音モデル(上限が既知であること)
        rule: 参照チャネルの選び方
        rng: rule が RANDOM のとき使う乱数生成器

    Returns:
        (参照チャネル j*, 分離されたチャネル集合)

    Raises:
        ValueError: sigma が空
    """
    return isolate_with_bounds(values, sigma, channel_bounds(channels), rule, rng)


def isolate_with_bounds(
    values: Sequence[float] | FloatArray,
    sigma: ChannelSet,
    bounds: FloatArray,
    rule: ReferenceRule = ReferenceRule.SMALLEST,
    rng: np.random.Generator | None = None,
) -> tuple[int, ChannelSet]:
    """isolate の雑音上限 ||ν_j||∞ を配列で受け取る版"""
    u = np.asarray(values, dtype=np.float64)
    if u.shape != bounds.shape:
        raise ValueError(f"length mismatch: values {u.shape}, bounds {bounds.shape}")
    j_ref = select_reference(sigma, rule, rng)
    tau = bounds[j_ref] + bounds
    isolated = tuple(int(j) for j in np.flatnonzero(np.abs(u[j_ref] - u) > tau))
    return j_ref, isolated


def monitor_frame(
    values: Sequence[float] | FloatArray,
    outcome: FusionOutcome,
    channels: Sequence[ChannelModel],
    thresholds: MonitorThresholds | None = None,
    rule: ReferenceRule = ReferenceRule.SMALLEST,
    rng: np.random.Generator | None = None,
) -> MonitorVerdict:
    """検知と分離をまとめて1フレーム分の判定を返す"""
    if thresholds is None:
        thresholds = MonitorThresholds.from_channels(channels)
    detected, flagged = detect(values, thresholds.detection)
    j_ref, isolated = isolate_with_bounds(values, outcome.sigma, thresholds.isolation_base, rule, rng)
    return MonitorVerdict(detected, flagged, isolated, j_ref)
