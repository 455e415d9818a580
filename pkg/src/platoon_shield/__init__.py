"""
攻撃を受ける冗長V2V通信路上のCACC隊列シミュレータ

融合(fusion)・攻撃検知/分離(attack_monitor)・H∞評価(control_design)を
決定的なシミュレーション(sim_runner)上で検証する。
"""

__version__ = "0.1.0"
