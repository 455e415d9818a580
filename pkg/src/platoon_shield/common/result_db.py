import sqlite3
from pathlib import Path
from typing import Any, Optional

from platoon_shield.common import sql
from platoon_shield.common.store_check import check_validity
from platoon_shield.common.types import TableDef


class ResultDb:
    """
    SQLite3 の結果DBを扱う基底クラス
    コンテキストマネージャとして使い、開始時にテーブルを作り直し、終了時に検証・コミットして閉じる
    """

    @property
    def init_query(self) -> str:
        """テーブル初期化クエリ(サブクラスで実装)"""
        raise NotImplementedError

    @property
    def table_def(self) -> TableDef:
        """テーブル定義(サブクラスで実装)"""
        raise NotImplementedError

    _db_path: Path
    conn: Optional[sqlite3.Connection]

    def __init__(self, dbpath: Path):
        """
        Args:
            dbpath (Path): データベースファイルのパス
        """
        self._db_path = Path(dbpath)
        self.conn = None

    def post_table_initialized(self) -> None:
        """テーブル作成直後に呼ばれる。必要ならサブクラスでオーバーライド"""
        pass

    def _initialize(self, cur: sqlite3.Cursor) -> None:
        sql.DropTableIfExists(cur, self.table_def.keys())
        sql.Execute(cur, self.init_query)
        self.post_table_initialized()

    def __enter__(self) -> "ResultDb":
        self.conn = sqlite3.connect(self._db_path)
        cur = self.conn.cursor()
        self._initialize(cur)
        sql.EnableForeignKeys(cur)
        return self

    def __exit__(
        self,
        e_type: Optional[type],
        e_value: Optional[BaseException],
        traceback: Optional[Any],
    ) -> bool:
        if self.conn is not None:
            if e_type is None:
                check_validity(self.conn, self.table_def)
                self.conn.commit()
            else:
                self.conn.rollback()
            self.conn.close()
            self.conn = None
        return False

    def cursor(self) -> sqlite3.Cursor:
        if self.conn is None:
            raise RuntimeError("Database connection is not established.")
        return self.conn.cursor()
