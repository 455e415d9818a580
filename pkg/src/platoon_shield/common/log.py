import argparse
import logging
from contextlib import suppress
from typing import Dict

# ログレベル名から数値へのマッピング
NAME_TO_LOGLEVEL: Dict[str, int] = {
    "critical": logging.CRITICAL,
    "error": logging.ERROR,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def add_logging_args(parser: argparse.ArgumentParser) -> None:
    """
    argparse.ArgumentParser にログレベル設定のための引数を追加
    サブコマンド間で共有するので、重複登録は無視する

    Args:
        parser (argparse.ArgumentParser): 引数を追加するパーサーオブジェクト
    """
    with suppress(argparse.ArgumentError):
        parser.add_argument(
            "--log_level",
            type=str,
            default="WARNING",
            help="log level (e.g., DEBUG, INFO, WARNING, ERROR, CRITICAL)",
        )


def resolve_log_level(name: str) -> int:
    """
    ログレベル名を数値に変換する
    不明な名前の場合はメッセージを出してWARNINGを返す
    """
    level = NAME_TO_LOGLEVEL.get(name.lower())
    if level is None:
        print(
            f"Error: Invalid log level '{name}'. Accepted values are: {', '.join(NAME_TO_LOGLEVEL.keys())}"
        )
        return logging.WARNING
    return level


def apply_logging_option(args: argparse.Namespace) -> None:
    """
    コマンドライン引数で指定されたログレベルを適用する

    Args:
        args (argparse.Namespace): 'log_level' 属性を持つことを想定
    """
    logging.basicConfig(
        format="%(levelname)s:%(message)s",
        level=resolve_log_level(getattr(args, "log_level", "WARNING")),
    )
