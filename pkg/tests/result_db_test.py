import sqlite3

import pytest

from platoon_shield.cmd_sweep import SweepDB
from platoon_shield.common import sql
from platoon_shield.common.errors import StoreColumnMismatch, StoreInvalidRow, StoreTableNotFound
from platoon_shield.common.store_check import check_validity
from platoon_shield.desc.sweep import Table_Def, init_table_query
from platoon_shield.sim_runner import LinkMetrics, Metrics


def make_metrics(seed: int, detection: float | None) -> Metrics:
    link = LinkMetrics(
        link=2,
        attacked_steps=0 if detection is None else 10,
        max_fusion_error=0.05,
        error_bound=0.9,
        detection_rate=detection,
        isolation_exact_rate=detection,
        isolation_precision=detection,
        isolation_recall=detection,
    )
    return Metrics("s", seed, 10, (link,), (), 1.0, 1e4)


def test_sweep_db_round_trip_and_aggregate(tmp_path):
    path = tmp_path / "sweep.sqlite3"
    with SweepDB(path, "s", 0, 3) as db:
        db.write_metrics(make_metrics(0, 0.5))
        db.write_metrics(make_metrics(1, 1.0))
        db.write_metrics(make_metrics(2, None))
        rows = db.aggregate()
    det = next(r for r in rows if r[1] == "detectionRate")
    assert det[0] == 2
    assert det[2] == pytest.approx(0.75)
    assert det[3] == 0.5
    assert det[4] == 1.0


def test_sweep_db_recreates_tables(tmp_path):
    path = tmp_path / "sweep.sqlite3"
    with SweepDB(path, "s", 0, 1) as db:
        db.write_metrics(make_metrics(0, 0.5))
    with SweepDB(path, "t", 5, 1) as db:
        pass
    with sqlite3.connect(path) as conn:
        assert conn.execute("SELECT COUNT(*) FROM SweepRun").fetchone()[0] == 0
        assert conn.execute("SELECT scenarioId FROM SweepMeta").fetchone()[0] == "t"


def test_check_validity_missing_table():
    conn = sqlite3.connect(":memory:")
    with pytest.raises(StoreTableNotFound):
        check_validity(conn, Table_Def)


def test_check_validity_invalid_row():
    conn = sqlite3.connect(":memory:")
    cur = conn.cursor()
    sql.Execute(cur, init_table_query())
    cur.execute("INSERT INTO SweepMeta VALUES (?,?,?)", ("s", 0, 1))
    check_validity(conn, Table_Def)
    cur.execute("INSERT INTO SweepMeta VALUES (?,?,?)", ("s", "abc", 1))
    with pytest.raises(StoreInvalidRow):
        check_validity(conn, Table_Def)


def test_check_validity_column_mismatch():
    conn = sqlite3.connect(":memory:")
    cur = conn.cursor()
    sql.Execute(cur, init_table_query())
    cur.execute("DROP TABLE SweepMeta")
    cur.execute("CREATE TABLE SweepMeta (scenarioId TEXT)")
    with pytest.raises(StoreColumnMismatch):
        check_validity(conn, Table_Def)


def test_sweep_db_replaces_stale_schema(tmp_path):
    path = tmp_path / "sweep.sqlite3"
    with sqlite3.connect(path) as conn:
        conn.execute("CREATE TABLE SweepMeta (scenarioId TEXT)")
    with SweepDB(path, "s", 3, 2) as db:
        db.write_metrics(make_metrics(3, 1.0))
    conn = sqlite3.connect(path)
    check_validity(conn, Table_Def)
    assert conn.execute("SELECT baseSeed, seedCount FROM SweepMeta").fetchone() == (3, 2)
    conn.close()
