"""
線形代数カーネル

行列指数関数、ゼロ次ホールドによる厳密離散化、固有値による安定判別、H∞ノルム。
行列はすべて float64 の numpy 配列で扱う(高々 8x8 程度)。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from platoon_shield.common.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    PreconditionError,
)
from platoon_shield.common.types import FloatArray

# H∞ノルム計算の既定値
DEFAULT_HINF_TOL = 1e-4
SWEEP_W_MIN = 1e-4
SWEEP_W_MAX = 1e4
SWEEP_POINTS = 2000
# Hamiltonian 固有値を虚軸上とみなす相対しきい値
IMAG_AXIS_TOL = 1e-8
_MAX_BRACKET_DOUBLING = 60


def as_matrix(a: object, name: str = "matrix") -> FloatArray:
    """2次元の有限な float64 配列に変換する"""
    m = np.array(a, dtype=np.float64, ndmin=2)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains non-finite entries")
    return m


def _require_square(a: FloatArray, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got {a.shape}")


@dataclass(frozen=True)
class StateSpacePlant:
    """
    連続時間の状態空間表現 (A, B, C, D)

    Attributes
    ----------
    A : n x n
    B : n x m
    C : p x n
    D : p x m
    """

    A: FloatArray
    B: FloatArray
    C: FloatArray
    D: FloatArray

    def __post_init__(self) -> None:
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        _require_square(self.A, "A")
        n = self.A.shape[0]
        if self.B.shape[0] != n or self.C.shape[1] != n:
            raise DimensionError(
                f"inconsistent dimensions: A{self.A.shape} B{self.B.shape} C{self.C.shape}"
            )
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionError(
                f"D must be {(self.C.shape[0], self.B.shape[1])}, got {self.D.shape}"
            )

    def frequency_response(self, w: FloatArray) -> np.ndarray:
        """G(jw) = C (jwI - A)^-1 B + D を周波数ごとに返す (len(w), p, m)"""
        n = self.A.shape[0]
        eye = np.eye(n)
        out = np.empty((len(w), self.C.shape[0], self.B.shape[1]), dtype=np.complex128)
        for k, wk in enumerate(w):
            out[k] = self.C @ np.linalg.solve(1j * wk * eye - self.A, self.B) + self.D
        return out


def mat_exp(a: object, t: float = 1.0) -> FloatArray:
    """
    行列指数関数 e^{At}

    scipy.linalg.expm (Padé近似 + scaling and squaring) を使う。

    Raises:
        DimensionError: Aが正方でない
        DomainError: 非有限の要素または t
    """
    m = as_matrix(a, "A")
    _require_square(m, "A")
    if not np.isfinite(t):
        raise DomainError(f"t must be finite, got {t}")
    return sla.expm(m * t)


def zoh_discretize(ac: object, bc: object, ts: float) -> tuple[FloatArray, FloatArray]:
    """
    ゼロ次ホールドによる厳密離散化

    拡大行列 [[Ac, Bc], [0, 0]] * Ts の指数関数の上側ブロックから (Ad, Bd) を読み取る。
    Ac が特異でもそのまま扱える。

    Args:
        ac: n x n
        bc: n x m
        ts: サンプリング周期 [s] (> 0)

    Returns:
        (Ad, Bd)
    """
    a = as_matrix(ac, "Ac")
    b = as_matrix(bc, "Bc")
    _require_square(a, "Ac")
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"Bc must have {a.shape[0]} rows, got {b.shape}")
    if not (np.isfinite(ts) and ts > 0.0):
        raise DomainError(f"Ts must be > 0, got {ts}")

    n, m = b.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = a
    aug[:n, n:] = b
    e = sla.expm(aug * ts)
    return e[:n, :n].copy(), e[:n, n:].copy()


def eigenvalues(a: object) -> np.ndarray:
    """固有値 (LAPACK の Hessenberg QR 反復)"""
    m = as_matrix(a, "A")
    _require_square(m, "A")
    try:
        return sla.eigvals(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {e}", m) from e


def spectral_abscissa(a: object) -> float:
    """固有値の実部の最大値"""
    return float(np.max(eigenvalues(a).real))


def is_hurwitz(a: object) -> bool:
    return spectral_abscissa(a) < 0.0


def _sigma_max(g: np.ndarray) -> np.ndarray:
    # (k, p, m) -> (k,)
    return np.linalg.svd(g, compute_uv=False)[..., 0]


def frequency_sweep(
    plant: StateSpacePlant,
    w_min: float = SWEEP_W_MIN,
    w_max: float = SWEEP_W_MAX,
    points: int = SWEEP_POINTS,
) -> tuple[float, float]:
    """
    対数間隔の周波数掃引(と w=0)で最大特異値のピークを探す

    Returns:
        (peak_gain, peak_frequency)
    """
    w = np.concatenate(([0.0], np.logspace(np.log10(w_min), np.log10(w_max), points)))
    gains = _sigma_max(plant.frequency_response(w))
    k = int(np.argmax(gains))
    return float(gains[k]), float(w[k])


def _has_imaginary_eigenvalue(plant: StateSpacePlant, gamma: float) -> bool:
    """
    Hamiltonian 行列が虚軸上に固有値を持つか
    持つ <=> gamma <= ||G||∞ (gamma > σmax(D) の範囲で)
    """
    a, b, c, d = plant.A, plant.B, plant.C, plant.D
    r = d.T @ d - gamma**2 * np.eye(d.shape[1])
    s = d @ d.T - gamma**2 * np.eye(d.shape[0])
    a_r = a - b @ np.linalg.solve(r, d.T) @ c
    ham = np.block(
        [
            [a_r, -gamma * b @ np.linalg.solve(r, b.T)],
            [gamma * c.T @ np.linalg.solve(s, c), -a_r.T],
        ]
    )
    eigs = eigenvalues(ham)
    return bool(np.any(np.abs(eigs.real) <= IMAG_AXIS_TOL * np.maximum(1.0, np.abs(eigs))))


def hinf_norm(plant: StateSpacePlant, tol: float = DEFAULT_HINF_TOL) -> float:
    """
    H∞ノルム sup_w σmax(G(jw)) を tol 以内で求める

    周波数掃引で下界を得てから、Hamiltonian 行列の虚軸固有値判定で二分法を行う。

    Raises:
        PreconditionError: A が Hurwitz でない(ノルムが定義されない)
        DomainError: tol <= 0
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be > 0, got {tol}")
    alpha = spectral_abscissa(plant.A)
    if alpha >= 0.0:
        raise PreconditionError(
            f"A is not Hurwitz (spectral abscissa {alpha:.6g}); H-infinity norm is unbounded"
        )

    sigma_d = float(np.linalg.norm(plant.D, 2)) if plant.D.size else 0.0
    sweep_max, _ = frequency_sweep(plant)
    lo = max(sigma_d, sweep_max)
    if lo == 0.0:
        # C=0 かつ D=0
        return 0.0

    hi = 2.0 * lo
    for _ in range(_MAX_BRACKET_DOUBLING):
        if not _has_imaginary_eigenvalue(plant, hi):
            break
        # 掃引が鋭いピークを取り逃した
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError("could not bracket the H-infinity norm", plant.A)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _has_imaginary_eigenvalue(plant, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
