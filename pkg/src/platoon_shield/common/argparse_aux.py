import argparse
from typing import Union, Set

# 許容される真偽値を表す文字列
TRUE_STRINGS: Set[str] = {"yes", "true", "t", "y", "1"}
FALSE_STRINGS: Set[str] = {"no", "false", "f", "n", "0"}
ALL_ACCEPTED_STRINGS: Set[str] = TRUE_STRINGS | FALSE_STRINGS


def str_to_bool(v: Union[str, bool]) -> bool:
    """
    コマンドライン引数として渡された文字列を真偽値に変換する。

    Raises:
        argparse.ArgumentTypeError: 有効な真偽値の文字列でない場合に発生する。
    """
    if isinstance(v, bool):
        return v
    v_lower: str = v.lower()
    if v_lower in TRUE_STRINGS:
        return True
    if v_lower in FALSE_STRINGS:
        return False
    raise argparse.ArgumentTypeError(
        f"Boolean value expected, but got '{v}'. "
        f"Accepted values are: {', '.join(sorted(ALL_ACCEPTED_STRINGS))}"
    )


def positive_int(v: str) -> int:
    """1以上の整数(シード数など)"""
    try:
        n = int(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"integer expected, but got '{v}'")
    if n < 1:
        raise argparse.ArgumentTypeError(f"value must be >= 1, got {n}")
    return n


def positive_float(v: str) -> float:
    """正の実数(許容誤差など)"""
    try:
        x = float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"real number expected, but got '{v}'")
    if not x > 0.0:
        raise argparse.ArgumentTypeError(f"value must be > 0, got {x}")
    return x
