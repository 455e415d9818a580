"""
hinf: 与えられたゲインの閉ループ H∞ ノルム γ を表示する
"""

import argparse
import logging as L
from contextlib import suppress

from platoon_shield.common.argparse_aux import positive_float
from platoon_shield.common.log import add_logging_args, apply_logging_option
from platoon_shield.control_design import closed_loop_hinf
from platoon_shield.numerics import DEFAULT_HINF_TOL
from platoon_shield.platoon_model import ControllerGains, VehicleParams


def add_optional_arguments_to_parser(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h", type=positive_float, required=True, help="Time headway [s]")
    parser.add_argument("--tau", type=positive_float, required=True, help="Driveline time constant [s]")
    parser.add_argument("--kp", type=float, required=True, help="Proportional gain")
    parser.add_argument("--kd", type=float, required=True, help="Derivative gain")
    with suppress(argparse.ArgumentError):
        parser.add_argument(
            "--tol",
            type=positive_float,
            default=DEFAULT_HINF_TOL,
            help="Bisection tolerance",
        )
    add_logging_args(parser)


def process(h: float, tau: float, kp: float, kd: float, tol: float = DEFAULT_HINF_TOL) -> float:
    """
    Raises:
        GainValidationError: kp > 0, kd > 0, kd > kp*tau を満たさない
    """
    gamma = closed_loop_hinf(VehicleParams(h=h, tau=tau), ControllerGains(kp=kp, kd=kd), tol)
    L.info(f"hinf: h={h} tau={tau} kp={kp} kd={kd} -> {gamma}")
    print(f"{gamma:.4f}")
    return gamma


if __name__ == "__main__":

    def init_parser() -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(description="Closed-loop H-infinity norm of a follower")
        add_optional_arguments_to_parser(parser)
        return parser

    argv = init_parser().parse_args()
    apply_logging_option(argv)
    process(argv.h, argv.tau, argv.kp, argv.kd, argv.tol)
