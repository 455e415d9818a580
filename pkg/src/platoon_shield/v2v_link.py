"""
車車間の冗長通信路モデル

各チャネル j で受信される値は U_j = u + ν_j + η_j。
ν_j は上限付きの雑音、η_j は攻撃者が注入する信号(攻撃されていないチャネルでは0)。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import truncnorm

from platoon_shield.common.errors import ConfigValidationError
from platoon_shield.common.types import ChannelSet, FloatArray


class NoiseKind(Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    ZERO = "zero"


class AttackKind(Enum):
    NONE = "none"
    RANDOM_SINGLE_CHANNEL = "random_single_channel"
    FIXED_SET = "fixed_set"
    ROUND_ROBIN = "round_robin"
    AMBIGUITY = "ambiguity"
    CUSTOM_SCHEDULE = "custom_schedule"


class MagnitudeKind(Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


# 切断正規雑音の標準偏差 (上限に対する比)
GAUSSIAN_NOISE_STD_RATIO = 0.5


@dataclass(frozen=True)
class ChannelModel:
    """
    1チャネル分の雑音モデル

    noise_bound は ||ν_j||∞。gaussian は [-b, b] で切断する。
    """

    noise_bound: float
    noise: NoiseKind = NoiseKind.UNIFORM

    def __post_init__(self) -> None:
        if not (np.isfinite(self.noise_bound) and self.noise_bound >= 0.0):
            raise ConfigValidationError(
                "noise_bound >= 0", f"noise_bound={self.noise_bound}"
            )

    def sample(self, rng: np.random.Generator) -> float:
        b = self.noise_bound
        if b == 0.0 or self.noise is NoiseKind.ZERO:
            return 0.0
        if self.noise is NoiseKind.UNIFORM:
            return float(rng.uniform(-b, b))
        std = GAUSSIAN_NOISE_STD_RATIO * b
        lim = b / std
        val = float(truncnorm.rvs(-lim, lim, loc=0.0, scale=std, random_state=rng))
        # 丸めで境界をわずかに越えないように
        return float(np.clip(val, -b, b))


@dataclass(frozen=True)
class AttackMagnitude:
    """注入信号 η の分布 (既定は N(0, 5^2)、切断しない)"""

    kind: MagnitudeKind = MagnitudeKind.GAUSSIAN
    mean: float = 0.0
    std: float = 5.0
    low: float = -5.0
    high: float = 5.0

    def sample(self, rng: np.random.Generator, size: int) -> FloatArray:
        if self.kind is MagnitudeKind.GAUSSIAN:
            return rng.normal(self.mean, self.std, size)
        return rng.uniform(self.low, self.high, size)


@dataclass(frozen=True)
class AttackPolicy:
    """
    リンク単位の攻撃ポリシー

    Attributes
    ----------
    kind : AttackKind
    q : int
        同時に攻撃されるチャネル数の上限
    magnitude : AttackMagnitude
    channels : ChannelSet
        fixed_set / ambiguity で攻撃するチャネル(0始まり)
    schedule : Mapping[int, ChannelSet]
        custom_schedule 用。ステップ -> チャネル集合。記載のないステップは攻撃なし
    decoy_offset : float
        ambiguity 用。攻撃チャネルを u + decoy_offset に揃える
    """

    kind: AttackKind = AttackKind.NONE
    q: int = 0
    magnitude: AttackMagnitude = field(default_factory=AttackMagnitude)
    channels: ChannelSet = ()
    schedule: Mapping[int, ChannelSet] = field(default_factory=dict)
    decoy_offset: float = 0.0

    def validate(self, n_channels: int) -> None:
        """
        Raises:
            ConfigValidationError: q > N、チャネル番号の範囲外、集合が q を超える
        """
        if self.q < 0 or self.q > n_channels:
            raise ConfigValidationError("0 <= q <= N", f"q={self.q}, N={n_channels}")
        sets = [self.channels, *self.schedule.values()]
        for s in sets:
            if any(j < 0 or j >= n_channels for j in s):
                raise ConfigValidationError(
                    "attacked channel index within 1..N", f"channels={s}, N={n_channels}"
                )
        if self.kind is AttackKind.AMBIGUITY:
            return
        if self.kind is AttackKind.FIXED_SET and len(self.channels) > self.q:
            raise ConfigValidationError(
                "card(W) <= q", f"channels={self.channels}, q={self.q}"
            )
        if self.kind is AttackKind.CUSTOM_SCHEDULE:
            for k, s in self.schedule.items():
                if len(s) > self.q:
                    raise ConfigValidationError(
                        "card(W(k)) <= q", f"step {k}: channels={s}, q={self.q}"
                    )
        if self.kind is AttackKind.RANDOM_SINGLE_CHANNEL and self.q < 1:
            raise ConfigValidationError("q >= 1 for random_single_channel", f"q={self.q}")

    def support(self, k: int, n_channels: int, rng: np.random.Generator) -> ChannelSet:
        """ステップ k で攻撃されるチャネル集合 W(k)"""
        match self.kind:
            case AttackKind.NONE:
                return ()
            case AttackKind.RANDOM_SINGLE_CHANNEL:
                return (int(rng.integers(n_channels)),)
            case AttackKind.FIXED_SET | AttackKind.AMBIGUITY:
                return tuple(sorted(self.channels))
            case AttackKind.ROUND_ROBIN:
                if self.q == 0:
                    return ()
                return tuple(sorted((k + j) % n_channels for j in range(self.q)))
            case AttackKind.CUSTOM_SCHEDULE:
                return tuple(sorted(self.schedule.get(k, ())))
        raise AssertionError(self.kind)


@dataclass(frozen=True)
class ChannelFrame:
    """
    1ステップ分の受信フレーム

    true_attack_support と true_command は評価用の真値で、融合・監視には使わない。
    """

    values: FloatArray
    true_attack_support: ChannelSet
    true_command: float

    @property
    def n_channels(self) -> int:
        return len(self.values)


def transmit(
    u: float,
    channels: Sequence[ChannelModel],
    policy: AttackPolicy,
    k: int,
    rng: np.random.Generator,
) -> ChannelFrame:
    """
    u を N 本のチャネルで送信した受信フレームを作る

    乱数の消費順は (攻撃集合, 雑音, 攻撃値) で固定。同じシードなら同じフレームになる。

    Raises:
        ConfigValidationError: N < 1 または q > N
    """
    n = len(channels)
    if n < 1:
        raise ConfigValidationError("N >= 1", "no channels")
    policy.validate(n)

    support = policy.support(k, n, rng)
    noise = np.array([c.sample(rng) for c in channels], dtype=np.float64)
    eta = np.zeros(n)
    if support:
        idx = list(support)
        if policy.kind is AttackKind.AMBIGUITY:
            eta[idx] = policy.decoy_offset
        else:
            eta[idx] = policy.magnitude.sample(rng, len(idx))
    values = u + noise + eta
    return ChannelFrame(values, support, float(u))


def ambiguity_attack_pair(
    u: float,
    u_bar: float,
    n_channels: int,
    q: int,
    w: ChannelSet,
    w_bar: ChannelSet,
    noise: Sequence[float],
) -> tuple[ChannelFrame, ChannelFrame]:
    """
    2q >= N のとき、異なる送信値 u, ū から同一の受信フレームを作る攻撃

    I = W ∩ W̄ として
        j ∈ W̄ \\ I : η̄_j = u - ū, η_j = 0
        j ∈ W \\ I  : η̄_j = 0,     η_j = ū - u
        j ∈ I      : η̄_j = u,     η_j = ū
    とすると u + ν + η = ū + ν + η̄ が成り立つ。

    Raises:
        ConfigValidationError: 事前条件 (2q >= N, |W| = |W̄| = q, W ∪ W̄ = 全チャネル) 違反
    """
    ws, wbs = set(w), set(w_bar)
    if 2 * q < n_channels:
        raise ConfigValidationError("q >= N/2", f"q={q}, N={n_channels}")
    if len(ws) != q or len(wbs) != q:
        raise ConfigValidationError("card(W) = card(W_bar) = q", f"W={w}, W_bar={w_bar}")
    if ws | wbs != set(range(n_channels)):
        raise ConfigValidationError("W ∪ W_bar = all channels", f"W={w}, W_bar={w_bar}")
    if len(noise) != n_channels:
        raise ConfigValidationError("len(noise) = N", f"len={len(noise)}, N={n_channels}")

    inter = ws & wbs
    eta = np.zeros(n_channels)
    eta_bar = np.zeros(n_channels)
    for j in range(n_channels):
        if j in inter:
            eta_bar[j] = u
            eta[j] = u_bar
        elif j in wbs:
            eta_bar[j] = u - u_bar
        elif j in ws:
            eta[j] = u_bar - u

    nu = np.asarray(noise, dtype=np.float64)
    values = u + nu + eta
    values_bar = u_bar + nu + eta_bar
    if not np.allclose(values, values_bar, rtol=0.0, atol=1e-12 * max(1.0, abs(u), abs(u_bar))):
        raise AssertionError("ambiguity construction failed")
    # u + (ū - u) と ū は丸めで一致しないことがあるので、同じ値を共有する
    shared = values.copy()
    return (
        ChannelFrame(shared, tuple(sorted(ws)), float(u)),
        ChannelFrame(shared.copy(), tuple(sorted(wbs)), float(u_bar)),
    )
