"""
結果DBのテーブル正当性チェック
"""

import sqlite3

from platoon_shield.common import sql
from platoon_shield.common.errors import (
    StoreColumnMismatch,
    StoreInvalidRow,
    StoreTableNotFound,
)
from platoon_shield.common.types import TableDef


def _type_matches(expected: type | tuple[type, ...], value: object) -> bool:
    if isinstance(expected, tuple):
        return type(value) in expected
    return type(value) is expected


# テーブルが存在するか、カラムの型が合っているかのチェック
def check_validity(conn: sqlite3.Connection, table_def: TableDef) -> None:
    cur = conn.cursor()
    for table_name, column_types in table_def.items():
        if not sql.HasTable(cur, table_name):
            raise StoreTableNotFound(table_name)
        if column_types is None:
            continue

        cur.execute(f"SELECT * FROM {table_name}")
        actual_cname = [tup[0] for tup in cur.description]
        if len(actual_cname) != len(column_types) or any(
            c not in column_types for c in actual_cname
        ):
            raise StoreColumnMismatch(table_name, column_types, actual_cname)

        for row in cur.fetchall():
            for i, val in enumerate(row):
                if not _type_matches(column_types[actual_cname[i]], val):
                    raise StoreInvalidRow(
                        table_name, {actual_cname[j]: v for j, v in enumerate(row)}
                    )
