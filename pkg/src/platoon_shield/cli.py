import argparse
import logging as L
import sys
from typing import Any, Callable, Sequence

from platoon_shield import cmd_hinf, cmd_run, cmd_sweep
from platoon_shield.common.errors import PlatoonShieldError
from platoon_shield.common.log import apply_logging_option


class CommandTask:
    """サブコマンド1つ分の実行タスク"""

    def __init__(
        self,
        name: str,
        module: Any,
        args_fn: Callable[[argparse.Namespace], tuple[Any, ...]],
        help_text: str,
    ) -> None:
        self.name = name
        self.module = module
        self.args_fn = args_fn
        self.help_text = help_text

    def add_parser(self, subparsers: Any) -> None:
        """サブコマンドとモジュール固有の引数を登録"""
        parser = subparsers.add_parser(self.name, help=self.help_text)
        self.module.add_optional_arguments_to_parser(parser)
        parser.set_defaults(task=self)

    def run(self, args: argparse.Namespace) -> int:
        """モジュールを実行して終了コードを返す"""
        L.info(f"Processing {self.name}")
        try:
            result = self.module.process(*self.args_fn(args))
        except PlatoonShieldError as e:
            L.error(f"{self.name}: {e}")
            return e.exit_code
        except Exception:
            L.exception(f"An error occurred during {self.name} processing")
            return 1
        return getattr(result, "exit_status", 0)


def build_commands() -> list[CommandTask]:
    return [
        CommandTask(
            "run",
            cmd_run,
            lambda a: (a.scenario, a.seed, a.out, a.emit_plots),
            "Simulate one scenario and write trace, metrics and plot data",
        ),
        CommandTask(
            "hinf",
            cmd_hinf,
            lambda a: (a.h, a.tau, a.kp, a.kd, a.tol),
            "Print the closed-loop H-infinity norm for the given gains",
        ),
        CommandTask(
            "sweep",
            cmd_sweep,
            lambda a: (a.scenario, a.seeds, a.out, a.seed, a.max_workers),
            "Run a scenario over consecutive seeds and aggregate rates",
        ),
    ]


def init_parser(commands: list[CommandTask]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoon-shield",
        description="CACC platoon simulation over redundant attacked V2V channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for c in commands:
        c.add_parser(sub)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    commands = build_commands()
    args = init_parser(commands).parse_args(argv)
    apply_logging_option(args)
    return args.task.run(args)


if __name__ == "__main__":
    sys.exit(main())
