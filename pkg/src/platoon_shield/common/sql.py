import sqlite3
from typing import Any, Iterable, Sequence


def EnableForeignKeys(cur: sqlite3.Cursor) -> None:
    """Foreign keys機能を有効化"""
    cur.execute("PRAGMA foreign_keys = ON")


def HasTable(cursor: sqlite3.Cursor, table_name: str) -> bool:
    """指定されたテーブルが存在するか(大文字小文字は区別しない)"""
    ret = cursor.execute(
        """
            SELECT COUNT(*) FROM sqlite_master
                WHERE type='table' AND LOWER(name)=?
        """,
        (table_name.lower(),),
    )
    return ret.fetchone()[0] > 0


def DropTableIfExists(cursor: sqlite3.Cursor, tables: Iterable[str]) -> bool:
    """存在するテーブルを削除し、1つでも削除したらTrue"""
    res: bool = False
    for t in tables:
        if HasTable(cursor, t):
            cursor.execute(f"DROP TABLE {t}")
            res = True
    return res


def Execute(cur: sqlite3.Cursor, query_string: str) -> None:
    """
    複数文の実行に対応
    クエリ文字列をセミコロンで分割し、各部分を個別に実行
    """
    for q in query_string.split(";"):
        if q.strip():
            cur.execute(q)


def InsertRows(
    cur: sqlite3.Cursor, table: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> None:
    """カラム名を明示してまとめて挿入"""
    placeholders = ",".join("?" for _ in columns)
    cur.executemany(
        f"INSERT INTO {table}({','.join(columns)}) VALUES ({placeholders})",
        rows,
    )
