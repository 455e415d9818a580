from typing import TypeAlias

import numpy as np
from numpy.typing import NDArray

# 行列・ベクトル(64bit浮動小数点)
FloatArray: TypeAlias = NDArray[np.float64]
# チャネル番号の集合(0始まり、昇順タプル)
ChannelSet: TypeAlias = tuple[int, ...]
# テーブル名 -> (カラム名 -> 型)
TableDef: TypeAlias = dict[str, dict[str, type | tuple[type, ...]] | None]
