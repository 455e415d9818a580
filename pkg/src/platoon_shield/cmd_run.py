"""
run: シナリオを1本実行し、トレース・指標・図用データを書き出す
"""

import argparse
import logging as L
import os
from contextlib import suppress
from dataclasses import dataclass, field
from pathlib import Path

from platoon_shield.common import default_path
from platoon_shield.common.argparse_aux import str_to_bool
from platoon_shield.common.errors import ConfigError, ConfigParseError
from platoon_shield.common.log import add_logging_args, apply_logging_option
from platoon_shield.scenario_config import ScenarioConfig, load_scenario
from platoon_shield.sim_runner import compute_metrics, run_scenario
from platoon_shield.trace_io import write_run_outputs


@dataclass
class RunManifest:
    scenario: Path
    seed: int
    out_dir: Path
    files: list[Path] = field(default_factory=list)
    exit_status: int = 0


def resolve_scenario_path(scenario: Path | str) -> Path:
    """
    パスが存在しなければ同梱シナリオ名 (例: example1) として探す
    """
    p = Path(scenario)
    if p.exists():
        return p
    for cand in (default_path.SCENARIO_DIR / p.name, default_path.SCENARIO_DIR / f"{p.name}.cfg"):
        if cand.exists():
            return cand
    raise ConfigParseError(str(p), None, None, "scenario file not found")


def resolve_seed(cli_seed: int | None, config: ScenarioConfig) -> int:
    """
    シードの優先順位: --seed > 環境変数 PLATOON_SHIELD_SEED > [sim] seed
    """
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(default_path.SEED_ENV_VAR)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{default_path.SEED_ENV_VAR} must be an integer, got '{env}'")
    return config.master_seed


def load_with_seed(scenario: Path | str, seed: int | None) -> tuple[Path, ScenarioConfig]:
    path = resolve_scenario_path(scenario)
    config = load_scenario(path)
    return path, config.with_seed(resolve_seed(seed, config))


def add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    """run と sweep で共通の引数"""
    with suppress(argparse.ArgumentError):
        parser.add_argument(
            "--scenario",
            type=Path,
            required=True,
            help="Scenario file (or bundled name such as example1)",
        )
    with suppress(argparse.ArgumentError):
        parser.add_argument(
            "--seed",
            type=int,
            default=None,
            help=f"Master seed (overrides ${default_path.SEED_ENV_VAR} and [sim] seed)",
        )
    with suppress(argparse.ArgumentError):
        parser.add_argument(
            "--out",
            type=Path,
            default=default_path.DEFAULT_OUT_DIR,
            help="Output directory",
        )


def add_optional_arguments_to_parser(parser: argparse.ArgumentParser) -> None:
    add_scenario_arguments(parser)
    parser.add_argument(
        "--emit-plots",
        dest="emit_plots",
        type=str_to_bool,
        nargs="?",
        const=True,
        default=False,
        help="Also write a gnuplot script for the plot data files",
    )
    add_logging_args(parser)


def process(
    scenario: Path | str, seed: int | None, out_dir: Path, emit_plots: bool = False
) -> RunManifest:
    """
    Raises:
        ConfigError: 設定の読み込み・検証エラー
        ReconstructibilityError: 2q >= N
        DivergenceError: 状態が発散した
    """
    path, config = load_with_seed(scenario, seed)
    L.info(f"run: {path} seed={config.master_seed}")
    trace = run_scenario(config, progress=L.getLogger().isEnabledFor(L.INFO))
    metrics = compute_metrics(trace)
    files = write_run_outputs(trace, metrics, Path(out_dir), emit_plots)
    return RunManifest(path, config.master_seed, Path(out_dir), files)


if __name__ == "__main__":

    def init_parser() -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(description="Run one platoon scenario")
        add_optional_arguments_to_parser(parser)
        return parser

    argv = init_parser().parse_args()
    apply_logging_option(argv)
    process(argv.scenario, argv.seed, argv.out, argv.emit_plots)
