"""
sweep: 連続したシードでシナリオを繰り返し実行し、検知・分離率を集計する

シード毎の結果は sweep.sqlite3 に、平均・最小・最大は rates.csv に書き出す。
"""

import argparse
import csv
import logging as L
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import closing, suppress
from pathlib import Path

from tqdm import tqdm

from platoon_shield import cmd_run
from platoon_shield.common import default_path, sql
from platoon_shield.common.argparse_aux import positive_int
from platoon_shield.common.log import add_logging_args, apply_logging_option
from platoon_shield.common.result_db import ResultDb
from platoon_shield.common.types import TableDef
from platoon_shield.desc.sweep import RATE_COLUMNS, Table_Def, init_table_query
from platoon_shield.scenario_config import ScenarioConfig
from platoon_shield.sim_runner import Metrics, compute_metrics, run_scenario

RATES_FILE = "rates.csv"
_RUN_COLUMNS = tuple(Table_Def["SweepRun"] or {})


class SweepDB(ResultDb):
    _scenario_id: str
    _base_seed: int
    _seed_count: int

    def __init__(self, dbpath: Path, scenario_id: str, base_seed: int, seed_count: int):
        super().__init__(dbpath)
        self._scenario_id = scenario_id
        self._base_seed = base_seed
        self._seed_count = seed_count

    @property
    def init_query(self) -> str:
        return init_table_query()

    @property
    def table_def(self) -> TableDef:
        return Table_Def

    def post_table_initialized(self) -> None:
        with closing(self.cursor()) as cur:
            cur.execute(
                "INSERT INTO SweepMeta VALUES (?,?,?)",
                (self._scenario_id, self._base_seed, self._seed_count),
            )

    def write_metrics(self, metrics: Metrics) -> None:
        rows = [
            (
                metrics.seed,
                lm.link,
                lm.attacked_steps,
                lm.max_fusion_error,
                lm.detection_rate,
                lm.isolation_exact_rate,
                lm.isolation_precision,
                lm.isolation_recall,
                metrics.max_state_norm,
            )
            for lm in metrics.links
        ]
        with closing(self.cursor()) as cur:
            sql.InsertRows(cur, "SweepRun", _RUN_COLUMNS, rows)

    def aggregate(self) -> list[tuple[int, str, float | None, float | None, float | None]]:
        """
        リンク・指標毎の (link, metric, mean, min, max)
        NULL (攻撃ステップなし) は集計から除外される
        """
        out = []
        with closing(self.cursor()) as cur:
            for col in RATE_COLUMNS:
                cur.execute(
                    f"""
                    SELECT link, AVG({col}), MIN({col}), MAX({col}) FROM SweepRun
                    GROUP BY link
                    ORDER BY link ASC
                    """
                )
                out += [(link, col, avg, lo, hi) for link, avg, lo, hi in cur.fetchall()]
        out.sort(key=lambda r: (r[0], RATE_COLUMNS.index(r[1])))
        return out


def _run_one(config: ScenarioConfig, seed: int) -> Metrics:
    return compute_metrics(run_scenario(config.with_seed(seed)))


def write_rates_csv(rows: list[tuple[int, str, float | None, float | None, float | None]], path: Path) -> None:
    def fmt(x: float | None) -> str:
        return "na" if x is None else f"{x:.9g}"

    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(("link", "metric", "mean", "min", "max"))
        for link, col, avg, lo, hi in rows:
            w.writerow((link, col, fmt(avg), fmt(lo), fmt(hi)))


def add_optional_arguments_to_parser(parser: argparse.ArgumentParser) -> None:
    cmd_run.add_scenario_arguments(parser)
    add_logging_args(parser)
    parser.add_argument(
        "--seeds",
        type=positive_int,
        required=True,
        help="Number of seeds (base seed .. base seed + seeds - 1)",
    )
    with suppress(argparse.ArgumentError):
        parser.add_argument(
            "--max_workers",
            type=positive_int,
            default=os.cpu_count(),
            help="Maximum number of worker processes",
        )


def process(
    scenario: Path | str,
    seeds: int,
    out_dir: Path,
    seed: int | None = None,
    max_workers: int | None = 1,
) -> cmd_run.RunManifest:
    """
    Args:
        scenario: シナリオファイル
        seeds: 実行するシード数
        out_dir: 出力ディレクトリ
        seed: 先頭のシード (None なら環境変数・設定ファイルの値)
        max_workers: 並列数。1ならこのプロセス内で順に実行する

    Raises:
        ConfigError / ReconstructibilityError / DivergenceError: run と同じ
    """
    path, config = cmd_run.load_with_seed(scenario, seed)
    base = config.master_seed
    seed_list = list(range(base, base + seeds))
    L.info(f"sweep: {path} seeds={seed_list[0]}..{seed_list[-1]}")

    results: list[Metrics] = []
    if max_workers is None or max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as exe:
            futures = [exe.submit(_run_one, config, s) for s in seed_list]
            for fut in tqdm(as_completed(futures), total=len(futures), desc="sweep"):
                results.append(fut.result())
    else:
        for s in tqdm(seed_list, desc="sweep"):
            results.append(_run_one(config, s))
    results.sort(key=lambda m: m.seed)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    db_path = out / default_path.SWEEP_DB_NAME
    rates_path = out / RATES_FILE
    with SweepDB(db_path, config.scenario_id, base, seeds) as db:
        for m in results:
            db.write_metrics(m)
        rows = db.aggregate()
    write_rates_csv(rows, rates_path)
    return cmd_run.RunManifest(path, base, out, [db_path, rates_path])


if __name__ == "__main__":

    def init_parser() -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(description="Run a scenario over consecutive seeds")
        add_optional_arguments_to_parser(parser)
        return parser

    argv = init_parser().parse_args()
    apply_logging_option(argv)
    process(argv.scenario, argv.seeds, argv.out, argv.seed, argv.max_workers)
