"""
乱数ストリームの導出

マスターシードと (シナリオID, 用途, 番号) から BLAKE3 で個別のシードを作る。
車両を追加しても他のリンクの乱数列は変化しない。
"""

import blake3
import numpy as np


def derive_seed(master_seed: int, scenario_id: str, purpose: str, index: int) -> int:
    """
    ストリーム毎の64bitシードを導出する

    Args:
        master_seed (int): シナリオのマスターシード
        scenario_id (str): シナリオ識別子
        purpose (str): 用途("link", "sensor", "isolate" など)
        index (int): リンク番号・車両番号

    Returns:
        int: 0 <= seed < 2**64
    """
    h = blake3.blake3()
    # 区切り文字を挟んで連結の曖昧さを避ける
    h.update(f"{master_seed}\x1f{scenario_id}\x1f{purpose}\x1f{index}".encode("utf-8"))
    return int.from_bytes(h.digest(length=8), "little")


def stream(
    master_seed: int, scenario_id: str, purpose: str, index: int
) -> np.random.Generator:
    """用途・番号ごとに独立した numpy の乱数生成器を返す"""
    return np.random.default_rng(derive_seed(master_seed, scenario_id, purpose, index))
