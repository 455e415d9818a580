from platoon_shield.common.types import TableDef

_NullableReal = (float, type(None))


def init_table_query() -> str:
    return """
        CREATE TABLE SweepMeta (
            scenarioId          TEXT NOT NULL,
            baseSeed            INTEGER NOT NULL,
            seedCount           INTEGER NOT NULL CHECK(seedCount >= 1)
        );
        CREATE TABLE SweepRun (
            seed                INTEGER NOT NULL,
            link                INTEGER NOT NULL CHECK(link >= 1),     -- 受信側の車両番号
            attackedSteps       INTEGER NOT NULL,
            maxFusionError      REAL NOT NULL,
            detectionRate       REAL CHECK(detectionRate BETWEEN 0 AND 1),  -- NULL: 攻撃ステップなし
            isolationExactRate  REAL CHECK(isolationExactRate BETWEEN 0 AND 1),
            isolationPrecision  REAL CHECK(isolationPrecision BETWEEN 0 AND 1),
            isolationRecall     REAL CHECK(isolationRecall BETWEEN 0 AND 1),
            maxStateNorm        REAL NOT NULL,
            UNIQUE(seed, link)
        );
    """


Table_Def: TableDef = {
    "SweepMeta": {
        "scenarioId": str,
        "baseSeed": int,
        "seedCount": int,
    },
    "SweepRun": {
        "seed": int,
        "link": int,
        "attackedSteps": int,
        "maxFusionError": float,
        "detectionRate": _NullableReal,
        "isolationExactRate": _NullableReal,
        "isolationPrecision": _NullableReal,
        "isolationRecall": _NullableReal,
        "maxStateNorm": float,
    },
}

# rates.csv に集計するカラム
RATE_COLUMNS: tuple[str, ...] = (
    "detectionRate",
    "isolationExactRate",
    "isolationPrecision",
    "isolationRecall",
    "maxFusionError",
)
