"""
冗長チャネルの融合

N 本の受信値から大きさ N-q の部分集合を全列挙し、
部分集合平均からの最大偏差 π_J が最小のものを採用してその平均を推定値とする。
攻撃チャネル数が q < N/2 なら推定誤差は 3||ν||∞ 以下。
"""

from __future__ import annotations

import functools
import itertools
import logging as L
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from platoon_shield.common.errors import ReconstructibilityError
from platoon_shield.common.types import ChannelSet, FloatArray
from platoon_shield.v2v_link import ChannelModel

# 推定誤差の上限 = ERROR_BOUND_FACTOR * ||ν||∞
ERROR_BOUND_FACTOR = 3.0


@dataclass(frozen=True)
class FusionOutcome:
    """
    融合結果

    Attributes
    ----------
    u_hat : float
        推定値 û
    sigma : ChannelSet
        採用した部分集合 σ (大きさ N-q、0始まり)
    pi_sigma : float
        σ での最大偏差 π
    error_bound : float | None
        推定誤差(再構成誤差) e_σ の保証上限 3||ν||∞。雑音上限が未知なら None
    """

    u_hat: float
    sigma: ChannelSet
    pi_sigma: float
    error_bound: float | None


def _as_subset(j: Iterable[int], n: int) -> list[int]:
    idx = list(j)
    if not idx:
        raise ValueError("subset must be non-empty")
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"subset {idx} out of range for N={n}")
    return idx


def subset_average(values: Sequence[float] | FloatArray, j: Iterable[int]) -> float:
    """部分集合 J の平均"""
    u = np.asarray(values, dtype=np.float64)
    return float(np.mean(u[_as_subset(j, len(u))]))


def subset_spread(values: Sequence[float] | FloatArray, j: Iterable[int]) -> float:
    """部分集合 J の平均からの最大偏差 π_J"""
    u = np.asarray(values, dtype=np.float64)
    sub = u[_as_subset(j, len(u))]
    return float(np.max(np.abs(np.mean(sub) - sub)))


def is_reconstructible(n_channels: int, q: int) -> bool:
    """q 本まで攻撃されても送信値が一意に決まるか (2q < N)"""
    return 2 * q < n_channels


def noise_bound_inf(channels: Sequence[ChannelModel]) -> float:
    """||ν||∞ = チャネル雑音上限の最大値"""
    return max((c.noise_bound for c in channels), default=0.0)


@functools.lru_cache(maxsize=64)
def candidate_subsets(n_channels: int, size: int) -> np.ndarray:
    """
    大きさ size の部分集合を辞書順で列挙した (C(N,size), size) の配列
    argmin の同点は先頭(辞書順最小)が選ばれる
    """
    arr = np.array(list(itertools.combinations(range(n_channels), size)), dtype=np.intp)
    arr.setflags(write=False)
    return arr


def fuse(
    values: Sequence[float] | FloatArray,
    q: int,
    noise_bound: float | None = None,
    *,
    enforce_reconstructibility: bool = True,
) -> FusionOutcome:
    """
    受信値 U から u を推定する

    Args:
        values: 受信値 U (長さ N)
        q: 想定する攻撃チャネル数の上限
        noise_bound: ||ν||∞ (既知なら誤差上限を付ける)
        enforce_reconstructibility: False なら 2q >= N でも計算する(反例の検証用)

    Raises:
        ReconstructibilityError: 2q >= N
        ValueError: q が範囲外
    """
    u = np.asarray(values, dtype=np.float64)
    n = len(u)
    if q < 0 or q >= n:
        raise ValueError(f"q must satisfy 0 <= q < N, got q={q}, N={n}")
    if enforce_reconstructibility and not is_reconstructible(n, q):
        raise ReconstructibilityError(n, q)

    subsets = candidate_subsets(n, n - q)
    members = u[subsets]
    means = members.mean(axis=1)
    spreads = np.max(np.abs(members - means[:, None]), axis=1)
    best = int(np.argmin(spreads))

    bound = None if noise_bound is None else ERROR_BOUND_FACTOR * noise_bound
    outcome = FusionOutcome(
        u_hat=float(means[best]),
        sigma=tuple(int(i) for i in subsets[best]),
        pi_sigma=float(spreads[best]),
        error_bound=bound,
    )
    L.debug(f"fuse: sigma={outcome.sigma} u_hat={outcome.u_hat:.6g} pi={outcome.pi_sigma:.3g}")
    return outcome
