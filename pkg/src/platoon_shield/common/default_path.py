from pathlib import Path

# 同梱シナリオの置き場所
SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
DEFAULT_OUT_DIR = Path("out")
SWEEP_DB_NAME = "sweep.sqlite3"
# シード値のフォールバック用環境変数
SEED_ENV_VAR = "PLATOON_SHIELD_SEED"
