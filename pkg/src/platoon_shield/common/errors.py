"""
platoon_shield で送出する例外クラス

コマンド境界で PlatoonShieldError を捕捉し、exit_code をそのまま終了コードにする。
"""

import textwrap
from typing import Any


class PlatoonShieldError(Exception):
    """本パッケージ固有の例外の基底クラス"""

    exit_code: int = 1


# ---- 設定 ----
class ConfigError(PlatoonShieldError):
    """シナリオ設定・コマンド引数の不備"""

    exit_code = 2


class ConfigParseError(ConfigError):
    """
    シナリオファイルの構文エラー
    ファイル名・行番号・フィールド名を保持する
    """

    path: str
    line: int | None
    field: str | None
    reason: str

    def __init__(
        self,
        path: str,
        line: int | None,
        field: str | None,
        reason: str,
    ):
        self.path = path
        self.line = line
        self.field = field
        self.reason = reason
        super().__init__(reason)

    def __str__(self) -> str:
        loc = self.path
        if self.line is not None:
            loc += f":{self.line}"
        if self.field is not None:
            return f"{loc}: field '{self.field}': {self.reason}"
        return f"{loc}: {self.reason}"


class ConfigValidationError(ConfigError):
    """値は読めたが不変条件を満たさない場合"""

    invariant: str
    detail: str

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        super().__init__(invariant)

    def __str__(self) -> str:
        if self.detail:
            return f"invariant violated: {self.invariant} ({self.detail})"
        return f"invariant violated: {self.invariant}"


class GainValidationError(ConfigValidationError):
    """kp > 0, kd > 0, kd > kp*tau を満たさないゲイン"""

    def __init__(self, kp: float, kd: float, tau: float):
        super().__init__(
            "kp > 0, kd > 0, kd > kp*tau",
            f"kp={kp}, kd={kd}, tau={tau}",
        )


# ---- シミュレーション ----
class DivergenceError(PlatoonShieldError):
    """状態が非有限値になった"""

    exit_code = 3

    def __init__(self, step: int, vehicle: int):
        self.step = step
        self.vehicle = vehicle
        super().__init__(f"non-finite state at step {step} (vehicle {vehicle})")


class ReconstructibilityError(PlatoonShieldError):
    """2q >= N で送信値が一意に復元できない"""

    exit_code = 4

    def __init__(self, n_channels: int, q: int):
        self.n_channels = n_channels
        self.q = q
        super().__init__(
            f"command not reconstructible: q={q} attacked of N={n_channels} channels"
            " requires q < N/2"
        )


# ---- 数値計算 ----
class NumericError(PlatoonShieldError):
    """数値計算カーネルの失敗"""


class DimensionError(NumericError):
    """行列の次元不一致"""


class DomainError(NumericError):
    """非有限値や定義域外の引数"""


class PreconditionError(NumericError):
    """事前条件(安定性など)を満たさない"""


class ConvergenceError(NumericError):
    """固有値反復が収束しなかった場合、対象行列の診断情報を持つ"""

    def __init__(self, message: str, matrix: Any):
        self.matrix = matrix
        super().__init__(message)

    def __str__(self) -> str:
        return textwrap.dedent(
            f"""
            {self.args[0]}
                shape: {getattr(self.matrix, "shape", None)}
                matrix:
                {self.matrix}
            """
        )


# ---- 結果DB ----
class StoreValidityError(PlatoonShieldError):
    """結果DBのテーブル正当性チェックに失敗"""

    _table_name: str

    def __init__(self, table_name: str):
        self._table_name = table_name
        super().__init__(f"table '{table_name}' failed validity check")


class StoreTableNotFound(StoreValidityError):
    def __str__(self) -> str:
        return f"table '{self._table_name}' not found"


class StoreColumnMismatch(StoreValidityError):
    """カラム数またはカラム名が期待値と一致しない"""

    def __init__(
        self,
        table_name: str,
        expected_columns: dict[str, Any],
        actual_columns: list[str],
    ):
        self._expected_columns = expected_columns
        self._actual_columns = actual_columns
        super().__init__(table_name)

    def __str__(self) -> str:
        return textwrap.dedent(
            f"""
            column mismatch (table: '{self._table_name}')
                expected:
                {list(self._expected_columns)}
                actual:
                {self._actual_columns}
            """
        )


class StoreInvalidRow(StoreValidityError):
    """行データに想定外の型が含まれる"""

    def __init__(self, table_name: str, row: dict[str, Any]):
        self._row = {k: (v, type(v)) for k, v in row.items()}
        super().__init__(table_name)

    def __str__(self) -> str:
        return f"invalid row in '{self._table_name}': {self._row}"
