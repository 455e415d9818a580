"""
シミュレーション結果のファイル出力

- trace.csv    : ステップ x 車両ごとの記録
- metrics.txt  : key = value 形式の指標
- *.dat        : 2列以上の空白区切り数値 (t, 値...)。gnuplot でそのまま描ける
- plots.gp     : 上記 .dat を描く gnuplot スクリプト (任意)
"""

import csv
import logging as L
from pathlib import Path

import numpy as np

from platoon_shield.common.types import ChannelSet
from platoon_shield.scenario_config import format_channel_set
from platoon_shield.sim_runner import STATE_A, STATE_E, STATE_U, STATE_V, Metrics, SimTrace

TRACE_COLUMNS = (
    "k",
    "t",
    "vehicle",
    "e",
    "v",
    "a",
    "u",
    "u_hat",
    "fusion_err",
    "sigma",
    "detected",
    "isolated",
    "true_support",
)
TRACE_FILE = "trace.csv"
METRICS_FILE = "metrics.txt"
GNUPLOT_FILE = "plots.gp"
NOT_APPLICABLE = "na"


def fmt(x: float) -> str:
    return f"{x:.9g}"


def set_code(s: ChannelSet) -> int:
    """チャネル集合をビット列(チャネル j -> 2^j)の整数にする"""
    return sum(1 << j for j in s)


def write_trace_csv(trace: SimTrace, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(TRACE_COLUMNS)
        for k in range(trace.steps):
            for i in range(1, trace.vehicle_count + 1):
                x = trace.states[k, i]
                lt = trace.links.get(i)
                if lt is None:
                    link_cols = [NOT_APPLICABLE, "-", NOT_APPLICABLE, "-", "-"]
                else:
                    link_cols = [
                        fmt(lt.fusion_error[k]),
                        format_channel_set(lt.sigma[k]),
                        str(int(lt.detected[k])),
                        format_channel_set(lt.isolated[k]),
                        format_channel_set(lt.true_support[k]),
                    ]
                w.writerow(
                    [
                        k,
                        fmt(trace.time[k]),
                        i,
                        fmt(x[STATE_E]),
                        fmt(x[STATE_V]),
                        fmt(x[STATE_A]),
                        fmt(x[STATE_U]),
                        fmt(trace.u_hat[k, i]),
                        *link_cols,
                    ]
                )


def write_metrics(metrics: Metrics, path: Path) -> None:
    lines = [f"{k} = {v}" for k, v in metrics.as_items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_plot_data(trace: SimTrace, out_dir: Path) -> list[Path]:
    """
    図用のデータファイルを書き出す

    Returns:
        書き出したファイルのパス
    """
    written: list[Path] = []

    def save(name: str, columns: list[np.ndarray], header: str) -> None:
        p = out_dir / name
        np.savetxt(p, np.column_stack(columns), fmt="%.9g", header=header)
        written.append(p)

    t = trace.time
    for i, lt in sorted(trace.links.items()):
        save(f"fusion_link{i}.dat", [t, lt.true_command, lt.u_hat], f"t u_{i - 1} u_hat_{i - 1}")
        save(
            f"isolation_link{i}.dat",
            [
                t,
                np.array([set_code(s) for s in lt.isolated], dtype=np.float64),
                np.array([set_code(s) for s in lt.true_support], dtype=np.float64),
            ],
            "t isolated_code true_support_code",
        )
    for i in range(1, trace.vehicle_count + 1):
        x = trace.states[:, i, :]
        save(f"velocity_v{i}.dat", [t, x[:, STATE_V]], f"t v_{i}")
        save(f"spacing_error_v{i}.dat", [t, x[:, STATE_E]], f"t e_{i}")
        save(f"acceleration_v{i}.dat", [t, x[:, STATE_A]], f"t a_{i}")
    return written


def gnuplot_script(trace: SimTrace) -> str:
    m = trace.vehicle_count
    out = ["set terminal pngcairo size 900,600", "set grid", "set xlabel 't [s]'"]
    for i in sorted(trace.links):
        out += [
            f"set output 'fusion_link{i}.png'",
            f"set ylabel 'u_{i - 1}'",
            f"plot 'fusion_link{i}.dat' using 1:2 with lines title 'u', \\",
            f"     'fusion_link{i}.dat' using 1:3 with lines title 'u_hat'",
        ]
    for name, label in (("velocity", "v"), ("spacing_error", "e"), ("acceleration", "a")):
        series = ", \\\n     ".join(
            f"'{name}_v{i}.dat' using 1:2 with lines title '{label}_{i}'" for i in range(1, m + 1)
        )
        out += [f"set output '{name}.png'", f"set ylabel '{label}'", f"plot {series}"]
    return "\n".join(out) + "\n"


def write_run_outputs(
    trace: SimTrace, metrics: Metrics, out_dir: Path, emit_plots: bool
) -> list[Path]:
    """
    run コマンドの出力一式を書き出す
    シミュレーションが成功してから呼ぶこと(失敗時は何も書かない)
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / TRACE_FILE
    metrics_path = out_dir / METRICS_FILE
    write_trace_csv(trace, trace_path)
    write_metrics(metrics, metrics_path)
    written = [trace_path, metrics_path, *write_plot_data(trace, out_dir)]
    if emit_plots:
        gp = out_dir / GNUPLOT_FILE
        gp.write_text(gnuplot_script(trace), encoding="utf-8")
        written.append(gp)
    L.info(f"wrote {len(written)} files to {out_dir}")
    return written
